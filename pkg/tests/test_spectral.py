import itertools
import math

import numpy as np
import pytest

from ssmcontrol.spectral import (DegenerateSpectrumError,
                                 InvalidSubspaceError, check_nonresonance,
                                 eigendecompose, select_slow_subspace,
                                 spectral_quotient)


def random_stable_matrix(rng, n):
    A = rng.normal(size=(n, n))
    shift = np.max(np.linalg.eigvals(A).real)
    return A - (shift + 0.5 + rng.uniform(0.0, 1.0)) * np.eye(n)


def pendulum_eigs(b, g_l=9.81):
    disc = math.sqrt(b * b - 4.0 * g_l)
    return (-b + disc) / 2.0, (-b - disc) / 2.0


class TestEigendecompose:
    def test_pendulum_b35(self, pendulum35):
        spec = eigendecompose(pendulum35.A)
        lam1, lam2 = pendulum_eigs(35.0)
        assert abs(spec.eigenvalues[0].real - lam1) < 1e-10
        assert abs(spec.eigenvalues[1].real - lam2) < 1e-10
        assert abs(lam1 + 0.28255) < 2e-5
        assert abs(lam2 + 34.71745) < 2e-5

    def test_pendulum_b7(self, pendulum7):
        spec = eigendecompose(pendulum7.A)
        lam1, lam2 = pendulum_eigs(7.0)
        assert abs(spec.eigenvalues[0].real - lam1) < 1e-10
        assert abs(lam1 + 1.93800) < 5e-5
        assert abs(lam2 + 5.06200) < 5e-5

    def test_diagonal(self):
        spec = eigendecompose(np.diag([-1.0, -2.0]))
        assert np.allclose(spec.eigenvalues, [-1.0, -2.0])
        assert np.allclose(spec.right_vectors, np.eye(2))
        assert np.allclose(spec.left_vectors, np.eye(2))

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateSpectrumError):
            eigendecompose(np.diag([-1.0, -1.0]))
        with pytest.raises(DegenerateSpectrumError):
            eigendecompose(np.array([[-1.0, 1.0], [0.0, -1.0]]))

    def test_residuals_random_stable(self):
        rng = np.random.default_rng(11)
        count = 0
        while count < 100:
            n = int(rng.integers(2, 9))
            A = random_stable_matrix(rng, n)
            try:
                spec = eigendecompose(A)
            except DegenerateSpectrumError:
                continue
            count += 1
            normA = np.linalg.norm(A, 2)
            for j in range(n):
                v = spec.right_vectors[:, j]
                res = np.linalg.norm(A @ v - spec.eigenvalues[j] * v)
                assert res <= 1e-10 * normA * np.linalg.norm(v)
            assert np.allclose(spec.left_vectors @ spec.right_vectors,
                               np.eye(n), atol=1e-10)

    def test_sorted_descending_real(self):
        rng = np.random.default_rng(5)
        A = random_stable_matrix(rng, 6)
        spec = eigendecompose(A)
        assert np.all(np.diff(spec.eigenvalues.real) <= 1e-12)

    def test_sign_convention(self):
        spec = eigendecompose(np.diag([-3.0, -1.0]))
        for j in range(2):
            v = spec.right_vectors[:, j]
            k = np.argmax(np.abs(v))
            assert v[k].real > 0 and abs(v[k].imag) < 1e-15


class TestSelectSlowSubspace:
    def test_diagonal(self):
        spec = eigendecompose(np.diag([-1.0, -2.0, -3.0]))
        spec = select_slow_subspace(spec, 2)
        assert np.allclose(spec.master_eigenvalues, [-1.0, -2.0])

    def test_pendulum_picks_slow_mode(self, spec35):
        assert spec35.master_indices == (0,)
        assert spec35.master_eigenvalues[0].real > -1.0

    def test_complex_pair_split_rejected(self):
        A = np.array([[-1.0, 2.0, 0.0], [-2.0, -1.0, 0.0],
                      [0.0, 0.0, -5.0]])
        spec = eigendecompose(A)
        with pytest.raises(InvalidSubspaceError):
            select_slow_subspace(spec, 1)
        spec2 = select_slow_subspace(spec, 2)
        assert spec2.n == 2
        assert not spec2.master_is_real

    def test_bounds(self):
        spec = eigendecompose(np.diag([-1.0, -2.0]))
        with pytest.raises(InvalidSubspaceError):
            select_slow_subspace(spec, 0)
        with pytest.raises(InvalidSubspaceError):
            select_slow_subspace(spec, 3)


class TestSpectralQuotient:
    def test_pendulum_b35_is_122(self, spec35):
        assert spectral_quotient(spec35) == 122

    def test_pendulum_b7_is_2(self, spec7):
        assert spectral_quotient(spec7) == 2

    def test_diagonal(self):
        spec = select_slow_subspace(eigendecompose(np.diag([-1.0, -2.0])), 1)
        assert spectral_quotient(spec) == 2

    def test_time_rescale_invariance(self):
        rng = np.random.default_rng(23)
        A = random_stable_matrix(rng, 5)
        full = eigendecompose(A)
        n = 1 if full.eigenvalues[0].imag == 0 else 2
        sigma = spectral_quotient(select_slow_subspace(full, n))
        for c in (0.1, 3.7, 120.0):
            spec_c = select_slow_subspace(eigendecompose(c * A), n)
            assert spectral_quotient(spec_c) == sigma

    def test_requires_selection_and_stability(self):
        spec = eigendecompose(np.diag([-1.0, -2.0]))
        with pytest.raises(ValueError):
            spectral_quotient(spec)
        unstable = select_slow_subspace(
            eigendecompose(np.diag([1.0, -2.0])), 1)
        with pytest.raises(ValueError):
            spectral_quotient(unstable)


def brute_force_nonresonance(master_re, outside_re, cap, rtol):
    """Oracle: direct nested enumeration over integer grids."""
    n = len(master_re)
    viols = []
    for m in itertools.product(range(cap + 1), repeat=n):
        if not 2 <= sum(m) <= cap:
            continue
        lhs = sum(mi * li for mi, li in zip(m, master_re))
        for lo in outside_re:
            if abs(lhs - lo) <= rtol * abs(lo):
                viols.append((tuple(m), lo))
    return viols


class TestNonresonance:
    def test_pendulum_b35_clean_up_to_122(self, spec35):
        report = check_nonresonance(spec35)
        assert report.ok
        assert report.max_order_checked == 122
        assert report.resonant_tuples == []

    def test_exact_low_order_resonance(self):
        spec = select_slow_subspace(eigendecompose(np.diag([-1.0, -2.0])), 1)
        report = check_nonresonance(spec, max_order=5)
        assert not report.ok
        assert report.resonant_tuples[0]["m"] == (2,)

    def test_non_integer_ratio_clean(self):
        spec = select_slow_subspace(
            eigendecompose(np.diag([-1.0, -3.5])), 1)
        report = check_nonresonance(spec, max_order=50)
        assert report.ok

    def test_brute_force_oracle_agreement(self):
        rng = np.random.default_rng(17)
        for _ in range(15):
            n_total = int(rng.integers(2, 5))
            lams = -np.sort(rng.uniform(0.2, 6.0, size=n_total))[::-1]
            # occasionally plant an exact resonance
            if rng.uniform() < 0.5 and n_total >= 2:
                k = int(rng.integers(2, 4))
                lams[-1] = k * lams[0]
            A = np.diag(lams)
            try:
                spec = select_slow_subspace(eigendecompose(A), 1)
            except DegenerateSpectrumError:
                continue
            report = check_nonresonance(spec, max_order=12, rtol=1e-9)
            cap = report.max_order_checked
            expected = brute_force_nonresonance(
                spec.master_eigenvalues.real,
                spec.slave_eigenvalues.real, cap, 1e-9)
            got = [(v["m"], v["lambda_outside"].real)
                   for v in report.resonant_tuples]
            assert sorted(got) == sorted(expected)

    def test_margin_reported(self):
        spec = select_slow_subspace(eigendecompose(np.diag([-1.0, -2.0])), 1)
        report = check_nonresonance(spec, max_order=3)
        v = report.resonant_tuples[0]
        assert v["margin"] <= 1e-6 * 2.0
