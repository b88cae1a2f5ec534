"""Eigen-analysis of the stability matrix and slow-subspace selection.

Provides matched left/right eigenvector bases, selection of a slow spectral
subspace, the absolute spectral quotient, and verification of the low-order
nonresonance conditions that the manifold solver relies on.
"""

import itertools
from dataclasses import dataclass, field, replace

import numpy as np


class DegenerateSpectrumError(ValueError):
    """Repeated eigenvalues: generalized eigenvectors are out of scope."""


class InvalidSubspaceError(ValueError):
    """Requested subspace dimension splits a complex-conjugate pair."""


@dataclass(frozen=True)
class SpectralData:
    """Sorted spectrum of A with biorthogonal left/right eigenvectors.

    Eigenvalues are sorted by descending real part (ties by ascending
    absolute imaginary part, positive imaginary first). ``right_vectors``
    holds eigenvectors as columns; ``left_vectors`` holds the rows of the
    inverse, so ``left_vectors @ right_vectors == I``. ``master_indices``
    selects the subspace E once :func:`select_slow_subspace` has run.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    master_indices: tuple = ()

    @property
    def N(self):
        return len(self.eigenvalues)

    @property
    def n(self):
        return len(self.master_indices)

    @property
    def slave_indices(self):
        return tuple(i for i in range(self.N) if i not in self.master_indices)

    @property
    def master_eigenvalues(self):
        return self.eigenvalues[list(self.master_indices)]

    @property
    def slave_eigenvalues(self):
        return self.eigenvalues[list(self.slave_indices)]

    def master_right(self):
        return self.right_vectors[:, list(self.master_indices)]

    def master_left(self):
        return self.left_vectors[list(self.master_indices), :]

    def slave_right(self):
        return self.right_vectors[:, list(self.slave_indices)]

    def slave_left(self):
        return self.left_vectors[list(self.slave_indices), :]

    @property
    def master_is_real(self):
        return bool(np.all(self.master_eigenvalues.imag == 0.0))


@dataclass(frozen=True)
class NonresonanceReport:
    ok: bool
    max_order_checked: int
    rtol: float
    resonant_tuples: list = field(default_factory=list)


def _sort_key(lam):
    return (-lam.real, abs(lam.imag), -np.sign(lam.imag))


def eigendecompose(A, degeneracy_rtol=1e-8):
    """Full eigendecomposition of A with a deterministic convention.

    Every right eigenvector is normalized to unit 2-norm and phase-rotated
    so its largest-magnitude component is real and positive; eigenvectors
    of real eigenvalues are returned real-valued. Raises
    :class:`DegenerateSpectrumError` if two eigenvalues coincide within
    ``degeneracy_rtol * ||A||_2``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    lams, V = np.linalg.eig(A)
    scale = np.linalg.norm(A, 2)
    for i, j in itertools.combinations(range(len(lams)), 2):
        if abs(lams[i] - lams[j]) <= degeneracy_rtol * scale:
            raise DegenerateSpectrumError(
                f"eigenvalues {lams[i]:.6g} and {lams[j]:.6g} coincide "
                f"within {degeneracy_rtol:g}*||A||")
    order = sorted(range(len(lams)), key=lambda k: _sort_key(lams[k]))
    lams = lams[order]
    V = V[:, order].astype(complex)
    for j in range(V.shape[1]):
        v = V[:, j]
        v = v / np.linalg.norm(v)
        k = int(np.argmax(np.abs(v)))
        phase = v[k] / abs(v[k])
        v = v / phase
        if lams[j].imag == 0.0:
            v = v.real.astype(complex)
        V[:, j] = v
    left = np.linalg.inv(V)
    lams.setflags(write=False)
    V.setflags(write=False)
    left.setflags(write=False)
    return SpectralData(eigenvalues=lams, right_vectors=V, left_vectors=left)


def select_slow_subspace(spec, n):
    """Mark the n slowest-decaying eigendirections as the subspace E.

    The spectrum is already sorted slow-to-fast, so this selects the first
    n indices after checking that the cut does not split a conjugate pair.
    """
    if not 1 <= n <= spec.N:
        raise InvalidSubspaceError(f"n must be in [1, {spec.N}], got {n}")
    chosen = spec.eigenvalues[:n]
    for lam in chosen:
        if lam.imag != 0.0 and not np.any(np.isclose(chosen, lam.conjugate())):
            raise InvalidSubspaceError(
                f"n={n} splits the complex pair at {lam:.6g}")
    return replace(spec, master_indices=tuple(range(n)))


def spectral_quotient(spec):
    """Integer part of (fastest decay anywhere) / (slowest decay in E)."""
    if not spec.master_indices:
        raise ValueError("master subspace not selected")
    if np.any(spec.eigenvalues.real >= 0):
        raise ValueError("spectral quotient requires a Hurwitz spectrum")
    slowest_in_E = spec.master_eigenvalues.real.max()
    fastest = spec.eigenvalues.real.min()
    if slowest_in_E == 0.0:
        raise ZeroDivisionError("slowest eigenvalue in E has zero real part")
    return int(fastest / slowest_in_E)


def check_nonresonance(spec, max_order=None, rtol=1e-6):
    """Check sum_j m_j Re(lambda_j) != Re(lambda_l) outside E.

    Enumerates integer tuples m over the master eigenvalues with
    2 <= sum(m) <= max_order (entries may be zero) and flags any tuple
    whose weighted real part matches an outside eigenvalue's real part
    within relative tolerance ``rtol``. Near-resonances inside tolerance
    are reported as violations together with their margin.

    ``max_order`` defaults to min(spectral quotient, 200).
    """
    if not spec.master_indices:
        raise ValueError("master subspace not selected")
    sigma = spectral_quotient(spec)
    cap = min(sigma, 200) if max_order is None else min(max_order, sigma)
    master_re = spec.master_eigenvalues.real
    outside = spec.slave_eigenvalues
    violations = []
    n = len(master_re)
    for total in range(2, cap + 1):
        for combo in itertools.combinations_with_replacement(range(n), total):
            m = [0] * n
            for i in combo:
                m[i] += 1
            lhs = float(np.dot(m, master_re))
            for lam in outside:
                margin = abs(lhs - lam.real)
                if margin <= rtol * abs(lam.real):
                    violations.append({
                        "m": tuple(m),
                        "order": total,
                        "lambda_outside": complex(lam),
                        "lhs": lhs,
                        "rhs": float(lam.real),
                        "margin": margin,
                    })
    return NonresonanceReport(ok=not violations, max_order_checked=cap,
                             rtol=rtol, resonant_tuples=violations)
