import itertools
import json
import math

import numpy as np
import pytest

from ssmcontrol.fields import (ControlAffineSystem, DimensionMismatchError,
                               PolynomialVectorField, Trajectory,
                               load_system, multiplicity, pendulum_system)


def dense_eval(field, x, degree):
    """Oracle: contract the dense symmetric tensor over all index tuples."""
    T = field.densify(degree)
    out = np.zeros(field.dim_out)
    for idx in itertools.product(range(field.dim_in), repeat=degree):
        out += T[(slice(None),) + idx] * np.prod([x[i] for i in idx])
    return out


class TestPolynomialVectorField:
    def test_pendulum_f0_equilibrium(self):
        system = pendulum_system(b=35.0, taylor_degree=3)
        assert np.allclose(system.f0(np.zeros(2)), 0.0)

    def test_pendulum_f0_cubic_truncation_value(self):
        # (g/l)(x - sin-Taylor3(x)) at x=0.5 is 9.81 * 0.5^3/6
        system = pendulum_system(b=35.0, taylor_degree=3)
        val = system.f0(np.array([0.5, 0.0]))
        expected = 9.81 * 0.5 ** 3 / 6.0
        assert val[0] == 0.0
        assert abs(val[1] - expected) < 1e-12 * expected
        assert abs(expected - 0.20438) < 1e-5

    def test_degree2_homogeneity(self):
        rng = np.random.default_rng(7)
        exps = np.array([[2, 0], [1, 1], [0, 2]])
        coeffs = rng.normal(size=(3, 2))
        f = PolynomialVectorField(2, 2, exps, coeffs)
        x = rng.normal(size=2)
        for s in (0.5, 2.0, -3.0):
            assert np.allclose(f(s * x), s ** 2 * f(x), rtol=1e-12)

    def test_dense_oracle_equivalence(self):
        rng = np.random.default_rng(42)
        for trial in range(20):
            dim = rng.integers(1, 5)
            degree = rng.integers(1, 4)
            n_terms = rng.integers(1, 6)
            exps = np.zeros((n_terms, dim), dtype=np.int64)
            for t in range(n_terms):
                for _ in range(degree):
                    exps[t, rng.integers(0, dim)] += 1
            coeffs = rng.normal(size=(n_terms, dim))
            f = PolynomialVectorField(dim, dim, exps, coeffs)
            x = rng.normal(size=dim)
            expected = dense_eval(f, x, degree)
            got = f(x)
            assert np.allclose(got, expected, rtol=1e-12, atol=1e-12)

    def test_densify_is_symmetric(self):
        f = PolynomialVectorField(2, 2, np.array([[2, 1]]),
                                  np.array([[1.0, -2.0]]))
        T = f.densify(3)
        for perm in itertools.permutations(range(3)):
            assert np.allclose(T, np.transpose(T, (0,) + tuple(p + 1
                                                               for p in perm)))

    def test_multiplicity(self):
        assert multiplicity((2, 1)) == 3
        assert multiplicity((3, 0)) == 1
        assert multiplicity((1, 1, 1)) == 6

    def test_dimension_mismatch(self):
        f = PolynomialVectorField(2, 2, np.array([[1, 0]]),
                                  np.array([[1.0, 0.0]]))
        with pytest.raises(DimensionMismatchError):
            f(np.zeros(3))

    def test_taylor_truncation_bound_unit_gravity(self):
        # |x - sin x - x^3/6| <= |x|^5/120 on |x| <= 0.1 (alternating series)
        system = pendulum_system(m=1.0, l=1.0, g=1.0, b=35.0,
                                 taylor_degree=3)
        for x1 in np.linspace(-0.1, 0.1, 41):
            err = abs(system.f0(np.array([x1, 0.0]))[1]
                      - (x1 - math.sin(x1)))
            assert err <= abs(x1) ** 5 / 120.0 + 1e-18

    def test_taylor_truncation_bound_table_params(self):
        system = pendulum_system(b=35.0, taylor_degree=3)
        g_l = 9.81
        for x1 in np.linspace(-0.1, 0.1, 41):
            err = abs(system.f0(np.array([x1, 0.0]))[1]
                      - g_l * (x1 - math.sin(x1)))
            assert err <= g_l * abs(x1) ** 5 / 120.0 + 1e-18


class TestControlAffineSystem:
    def test_rhs_origin_equilibrium(self, pendulum35):
        assert np.allclose(pendulum35.eval_rhs(np.zeros(2), np.zeros(1)),
                           0.0)

    def test_rhs_unit_torque(self, pendulum35):
        # x=0, u=1 -> (0, 1/(m l^2)) = (0, 1) for Table-1 parameters
        rhs = pendulum35.eval_rhs(np.zeros(2), np.array([1.0]))
        assert np.allclose(rhs, [0.0, 1.0], atol=1e-14)

    def test_rhs_exact_sine(self, pendulum35):
        # exact nonlinearity at x=(pi/6, 0), u=0: (0, -9.81*sin(pi/6))
        rhs = pendulum35.eval_rhs(np.array([math.pi / 6, 0.0]),
                                  np.zeros(1), exact=True)
        assert np.allclose(rhs, [0.0, -9.81 * 0.5], atol=1e-12)

    def test_rhs_affine_in_u(self):
        rng = np.random.default_rng(3)
        A = -np.eye(3) + 0.1 * rng.normal(size=(3, 3))
        f0 = PolynomialVectorField.from_terms(
            3, 3, [([0, 1], 2, 0.3), ([2, 2], 0, -0.7)])
        ctrls = [PolynomialVectorField.from_terms(
                     3, 3, [([], i, 1.0), ([i], (i + 1) % 3, 0.5)])
                 for i in range(2)]
        system = ControlAffineSystem(A, f0, ctrls, np.eye(2, 3),
                                     epsilon=0.7)
        x = rng.normal(size=3)
        u1, u2 = rng.normal(size=2), rng.normal(size=2)
        for a, b in [(0.3, -1.2), (2.0, 0.5)]:
            lhs = system.eval_rhs(x, a * u1 + b * u2)
            rhs = (a * system.eval_rhs(x, u1) + b * system.eval_rhs(x, u2)
                   - (a + b - 1.0) * system.eval_rhs(x, np.zeros(2)))
            assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_check_assumptions_pendulum(self, pendulum35):
        report = pendulum35.check_assumptions()
        assert report.stable and report.equilibrium_ok

    def test_check_assumptions_undamped(self):
        A = np.array([[0.0, 1.0], [-1.0, 0.0]])
        f0 = PolynomialVectorField(2, 2)
        u = PolynomialVectorField.from_terms(2, 2, [([], 1, 1.0)])
        system = ControlAffineSystem(A, f0, [u], np.eye(1, 2))
        assert not system.check_assumptions().stable

    def test_check_assumptions_constant_f0(self):
        A = -np.eye(2)
        f0 = PolynomialVectorField.from_terms(2, 2, [([], 0, 0.5)])
        u = PolynomialVectorField.from_terms(2, 2, [([], 1, 1.0)])
        with pytest.raises(ValueError):
            ControlAffineSystem(A, f0, [u], np.eye(1, 2))
        system = ControlAffineSystem(A, f0, [u], np.eye(1, 2), strict=False)
        report = system.check_assumptions()
        assert report.stable and not report.equilibrium_ok

    def test_f0_linear_terms_rejected(self):
        A = -np.eye(2)
        f0 = PolynomialVectorField.from_terms(2, 2, [([0], 1, 1.0)])
        u = PolynomialVectorField.from_terms(2, 2, [([], 1, 1.0)])
        with pytest.raises(ValueError):
            ControlAffineSystem(A, f0, [u], np.eye(1, 2))


class TestTrajectory:
    def test_validation(self):
        with pytest.raises(ValueError):
            Trajectory(np.array([0.0, 0.0]), np.zeros((2, 1)))
        with pytest.raises(ValueError):
            Trajectory(np.array([0.0, 1.0]), np.zeros((3, 1)))
        traj = Trajectory(np.array([0.0, 1.0, 2.0]), np.zeros((3, 2)))
        assert traj.window(0.5, 2.0).states.shape == (2, 2)


class TestJson:
    def test_system_round_trip(self, pendulum35):
        doc = pendulum35.to_dict()
        rebuilt = load_system(doc)
        assert np.allclose(rebuilt.A, pendulum35.A)
        x = np.array([0.2, -0.3])
        assert np.allclose(rebuilt.f0(x), pendulum35.f0(x), rtol=1e-15)
        assert np.allclose(rebuilt.controls[0](x),
                           pendulum35.controls[0](x), rtol=1e-15)

    def test_preset_document(self):
        doc = json.dumps({"preset": "pendulum",
                          "params": {"m": 1, "l": 1, "g": 9.81, "b": 7},
                          "taylor_degree": 5})
        system = load_system(doc)
        assert system.meta["params"]["b"] == 7
        assert system.exact_f0 is not None

    def test_degree_mismatch_rejected(self):
        with pytest.raises(ValueError):
            PolynomialVectorField.from_json_terms(
                2, 2, [{"degree": 2, "multi_index": [0],
                        "target_component": 0, "coefficient": 1.0}])
