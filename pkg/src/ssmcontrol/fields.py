"""Polynomial control-affine systems.

A :class:`PolynomialVectorField` stores a Taylor-truncated analytic vector
field in symmetrized multi-index form: one row of monomial exponents plus a
coefficient vector per monomial, instead of dense degree-j tensors of size
N x N^j. A :class:`ControlAffineSystem` bundles the linear part ``A``, the
uncontrolled nonlinearity ``f0``, the control fields ``f_i``, the output
selection ``H`` and the control scaling ``epsilon`` of

    dx/dt = A x + f0(x) + epsilon * sum_i f_i(x) u_i,   y = H x.
"""

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .kernels import poly_eval, poly_eval_batch


class DimensionMismatchError(ValueError):
    """Input vector length does not match the field's input dimension."""


def multiplicity(exponents):
    """Number of distinct index orderings of a monomial exponent tuple."""
    total = sum(exponents)
    m = math.factorial(total)
    for e in exponents:
        m //= math.factorial(e)
    return m


class PolynomialVectorField:
    """Polynomial map R^dim_in -> R^dim_out in monomial-coefficient form.

    Parameters
    ----------
    dim_in, dim_out : int
        Input and output dimensions.
    exps : (n_terms, dim_in) int array
        Monomial exponents; duplicate rows are merged.
    coeffs : (n_terms, dim_out) float array
        Monomial coefficient vectors. The coefficient is the plain monomial
        coefficient: evaluation is ``sum_t coeffs[t] * prod_d x[d]**exps[t,d]``,
        equal to contracting the symmetric degree-j tensors with x ox ... ox x.
    """

    def __init__(self, dim_in, dim_out, exps=None, coeffs=None):
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        if exps is None:
            exps = np.zeros((0, self.dim_in), dtype=np.int64)
            coeffs = np.zeros((0, self.dim_out))
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, self.dim_in)
        coeffs = np.asarray(coeffs, dtype=float).reshape(-1, self.dim_out)
        if exps.shape[0] != coeffs.shape[0]:
            raise ValueError("exps and coeffs row counts differ")
        if exps.size and exps.min() < 0:
            raise ValueError("negative exponent")
        # canonical order + duplicate merge + zero-coefficient pruning
        merged = {}
        for e, c in zip(exps, coeffs):
            key = tuple(int(v) for v in e)
            merged[key] = merged.get(key, 0.0) + c
        keys = sorted(merged, key=lambda k: (sum(k), k))
        keys = [k for k in keys if np.any(merged[k] != 0.0)]
        self.exps = np.array(keys, dtype=np.int64).reshape(-1, self.dim_in)
        self.coeffs = (np.array([merged[k] for k in keys], dtype=float)
                       .reshape(-1, self.dim_out))
        self.exps.setflags(write=False)
        self.coeffs.setflags(write=False)

    @classmethod
    def from_terms(cls, dim_in, dim_out, terms):
        """Build from ``(multi_index, target_component, coefficient)`` triples.

        ``multi_index`` lists the (repeatable) input indices of the monomial,
        e.g. ``[0, 0, 1]`` for x0^2 x1; an empty list is a constant term.
        """
        rows = {}
        for multi_index, target, coeff in terms:
            e = [0] * dim_in
            for idx in multi_index:
                e[int(idx)] += 1
            key = tuple(e)
            vec = rows.setdefault(key, np.zeros(dim_out))
            vec[int(target)] += float(coeff)
        if not rows:
            return cls(dim_in, dim_out)
        exps = np.array(list(rows.keys()), dtype=np.int64)
        coeffs = np.array(list(rows.values()))
        return cls(dim_in, dim_out, exps, coeffs)

    @property
    def n_terms(self):
        return self.exps.shape[0]

    @property
    def degrees(self):
        return sorted({int(e.sum()) for e in self.exps})

    @property
    def max_degree(self):
        return max(self.degrees, default=0)

    @property
    def min_degree(self):
        return min(self.degrees, default=0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim_in,):
            raise DimensionMismatchError(
                f"expected input of length {self.dim_in}, got shape {x.shape}")
        return poly_eval(self.exps, self.coeffs, x)

    def eval_batch(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim_in:
            raise DimensionMismatchError(
                f"expected (m, {self.dim_in}) inputs, got shape {X.shape}")
        return poly_eval_batch(self.exps, self.coeffs, X)

    def degree_terms(self, j):
        """Rows of degree j as ``(exps, coeffs)`` arrays."""
        mask = self.exps.sum(axis=1) == j
        return self.exps[mask], self.coeffs[mask]

    def densify(self, j):
        """Dense symmetric degree-j tensor, shape (dim_out,) + (dim_in,)*j.

        Each monomial coefficient is spread uniformly over the permutations
        of its index tuple, so the tensor is symmetric in the j input slots
        and contracting it with x ox ... ox x reproduces evaluation.
        """
        shape = (self.dim_out,) + (self.dim_in,) * j
        T = np.zeros(shape)
        exps, coeffs = self.degree_terms(j)
        for e, c in zip(exps, coeffs):
            idx = []
            for d, k in enumerate(e):
                idx.extend([d] * int(k))
            val = c / multiplicity(tuple(e))
            for perm in set(itertools.permutations(idx)):
                T[(slice(None),) + perm] = val
        return T

    def jacobian_fields(self):
        """Partial derivatives d(field)/d(x_d) as dim_in new fields."""
        out = []
        for d in range(self.dim_in):
            rows = []
            for e, c in zip(self.exps, self.coeffs):
                if e[d] == 0:
                    continue
                e2 = e.copy()
                e2[d] -= 1
                rows.append((e2, e[d] * c))
            if rows:
                exps = np.array([r[0] for r in rows], dtype=np.int64)
                coeffs = np.array([r[1] for r in rows])
                out.append(PolynomialVectorField(self.dim_in, self.dim_out,
                                                 exps, coeffs))
            else:
                out.append(PolynomialVectorField(self.dim_in, self.dim_out))
        return out

    def to_json_terms(self):
        terms = []
        for e, c in zip(self.exps, self.coeffs):
            multi = []
            for d, k in enumerate(e):
                multi.extend([d] * int(k))
            for target, coeff in enumerate(c):
                if coeff != 0.0:
                    terms.append({"degree": int(e.sum()),
                                  "multi_index": multi,
                                  "target_component": target,
                                  "coefficient": float(coeff)})
        return terms

    @classmethod
    def from_json_terms(cls, dim_in, dim_out, terms):
        triples = []
        for t in terms:
            multi = list(t["multi_index"])
            if "degree" in t and int(t["degree"]) != len(multi):
                raise ValueError(
                    f"degree {t['degree']} does not match multi_index {multi}")
            triples.append((multi, t["target_component"], t["coefficient"]))
        return cls.from_terms(dim_in, dim_out, triples)


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped trajectory samples.

    kind is one of ``full_state``, ``output``, ``reduced``.
    """

    times: np.ndarray
    states: np.ndarray
    kind: str = "full_state"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states)
        if states.ndim == 1:
            states = states[:, None]
        if times.ndim != 1 or len(times) != states.shape[0]:
            raise ValueError("times and states lengths differ")
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def window(self, t_lo, t_hi):
        mask = (self.times >= t_lo - 1e-12) & (self.times <= t_hi + 1e-12)
        return Trajectory(self.times[mask], self.states[mask], self.kind)


@dataclass(frozen=True)
class AssumptionReport:
    stable: bool
    equilibrium_ok: bool
    details: dict


class ControlAffineSystem:
    """Control-affine polynomial system with output selection.

    ``f0`` must contain only terms of degree >= 2 (the linear part lives in
    ``A`` and the equilibrium is at the origin); pass ``strict=False`` to
    build a non-conforming system anyway and let ``check_assumptions``
    report the violation.
    """

    def __init__(self, A, f0, controls, H, epsilon=1.0, strict=True,
                 exact_f0=None, meta=None):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        N = A.shape[0]
        H = np.asarray(H, dtype=float)
        if H.ndim != 2 or H.shape[1] != N:
            raise ValueError("H must have shape (o, N)")
        if H.shape[0] > N:
            raise ValueError("more outputs than states (o > N)")
        if not controls:
            raise ValueError("at least one control field is required")
        for f in (f0, *controls):
            if f.dim_in != N or f.dim_out != N:
                raise ValueError("field dimensions do not match A")
        if strict and f0.n_terms and f0.min_degree < 2:
            raise ValueError("f0 must have degree >= 2 terms only")
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.A = A
        self.f0 = f0
        self.controls = tuple(controls)
        self.H = H
        self.epsilon = float(epsilon)
        self.exact_f0 = exact_f0
        self.meta = dict(meta or {})
        self.A.setflags(write=False)
        self.H.setflags(write=False)

    @property
    def N(self):
        return self.A.shape[0]

    @property
    def m(self):
        return len(self.controls)

    @property
    def o(self):
        return self.H.shape[0]

    def eval_rhs(self, x, u, exact=False):
        """Right-hand side A x + f0(x) + epsilon * sum_i f_i(x) u_i.

        With ``exact=True`` the closed-form ``exact_f0`` callback replaces
        the Taylor-truncated ``f0`` (available for presets built from
        non-polynomial nonlinearities).
        """
        x = np.asarray(x, dtype=float)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if x.shape != (self.N,):
            raise DimensionMismatchError(f"state must have length {self.N}")
        if u.shape != (self.m,):
            raise DimensionMismatchError(f"input must have length {self.m}")
        if exact:
            if self.exact_f0 is None:
                raise ValueError("system has no exact_f0 callback")
            rhs = self.A @ x + self.exact_f0(x)
        else:
            rhs = self.A @ x + self.f0(x)
        for ui, fi in zip(u, self.controls):
            if ui != 0.0:
                rhs = rhs + self.epsilon * ui * fi(x)
        return rhs

    def output(self, x):
        return self.H @ np.asarray(x, dtype=float)

    def check_assumptions(self, tol=1e-12):
        """Report stability of A (Hurwitz) and equilibrium at the origin."""
        eigvals = np.linalg.eigvals(self.A)
        stable = bool(np.all(eigvals.real < 0))
        f0_at_zero = self.f0(np.zeros(self.N))
        equilibrium_ok = bool(np.linalg.norm(f0_at_zero) <= tol)
        return AssumptionReport(
            stable=stable,
            equilibrium_ok=equilibrium_ok,
            details={
                "eigenvalues": eigvals,
                "f0_norm_at_zero": float(np.linalg.norm(f0_at_zero)),
                "max_real_part": float(eigvals.real.max()),
            })

    def to_dict(self):
        return {
            "A": self.A.tolist(),
            "H": self.H.tolist(),
            "epsilon": self.epsilon,
            "f0": {"terms": self.f0.to_json_terms()},
            "controls": [{"terms": f.to_json_terms()} for f in self.controls],
            "meta": self.meta,
        }


def pendulum_system(m=1.0, l=1.0, g=9.81, b=35.0, epsilon=1.0,
                    taylor_degree=5):
    """Damped pendulum about its hanging equilibrium, first-order form.

    State (angle, angular velocity) in radians; single torque input scaled
    by 1/(m l^2); output is the angle. The sine restoring force enters as
    an odd Taylor expansion up to ``taylor_degree``; the exact closed form
    is kept as ``exact_f0`` for validation runs.
    """
    if taylor_degree < 3:
        raise ValueError("taylor_degree must be >= 3")
    ml2 = m * l * l
    A = np.array([[0.0, 1.0], [-g / l, -b / ml2]])
    # g/l * (x1 - sin x1) = g/l * (x1^3/6 - x1^5/120 + x1^7/5040 - ...)
    terms = []
    sign = 1.0
    for k in range(3, taylor_degree + 1, 2):
        coeff = sign * (g / l) / math.factorial(k)
        terms.append(([0] * k, 1, coeff))
        sign = -sign
    f0 = PolynomialVectorField.from_terms(2, 2, terms)
    torque = PolynomialVectorField.from_terms(2, 2, [([], 1, 1.0 / ml2)])
    H = np.array([[1.0, 0.0]])

    def exact_f0(x):
        return np.array([0.0, (g / l) * (x[0] - math.sin(x[0]))])

    return ControlAffineSystem(
        A, f0, [torque], H, epsilon=epsilon, exact_f0=exact_f0,
        meta={"preset": "pendulum",
              "params": {"m": m, "l": l, "g": g, "b": b},
              "taylor_degree": taylor_degree})


def load_system(source):
    """Build a system from a JSON document, path, or parsed dict.

    Either a named preset ``{"preset": "pendulum", "params": {...}}`` or an
    inline definition with keys A, H, epsilon, f0, controls.
    """
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError:
            with open(source) as fh:
                doc = json.load(fh)
    else:
        doc = source
    if "preset" in doc:
        if doc["preset"] != "pendulum":
            raise ValueError(f"unknown preset {doc['preset']!r}")
        kwargs = dict(doc.get("params", {}))
        if "taylor_degree" in doc:
            kwargs["taylor_degree"] = doc["taylor_degree"]
        if "epsilon" in doc:
            kwargs["epsilon"] = doc["epsilon"]
        return pendulum_system(**kwargs)
    A = np.asarray(doc["A"], dtype=float)
    N = A.shape[0]
    f0 = PolynomialVectorField.from_json_terms(N, N, doc["f0"]["terms"])
    controls = [PolynomialVectorField.from_json_terms(N, N, c["terms"])
                for c in doc["controls"]]
    return ControlAffineSystem(A, f0, controls, np.asarray(doc["H"]),
                               epsilon=doc.get("epsilon", 1.0),
                               meta=doc.get("meta"))
