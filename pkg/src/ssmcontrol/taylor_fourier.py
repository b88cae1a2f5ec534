"""Taylor-Fourier coefficient bundles for the manifold lift and the
reduced dynamics.

A map W(p, phi) is stored as an autonomous polynomial part plus an
O(epsilon) part whose coefficients carry integer harmonics:

    W(p, phi) = sum_e  A_e p^e  +  epsilon * sum_{h,e} C_{h,e} p^e e^{i h phi}

Coefficients are complex in general; conjugate symmetry across +-h (and
across conjugate parametrization pairs) makes evaluations real. When the
master spectrum is real everything collapses to real arrays, which is what
the packed kernel format requires.
"""

from dataclasses import dataclass, field

import numpy as np

from .kernels import tf_eval, tf_eval_batch


@dataclass(frozen=True)
class TFPack:
    """Packed real cos/sin form consumed by the kernels."""

    exps: np.ndarray    # (n_terms, n) int64
    fharm: np.ndarray   # (n_funcs,) int64, h >= 0
    fkind: np.ndarray   # (n_funcs,) int64, 0 cos / 1 sin
    coeffs: np.ndarray  # (n_terms, n_funcs, n_out) float64

    @property
    def n(self):
        return self.exps.shape[1]

    @property
    def n_out(self):
        return self.coeffs.shape[2]

    def eval(self, p, phi):
        return tf_eval(self.exps, self.fharm, self.fkind, self.coeffs,
                       np.atleast_1d(np.asarray(p, dtype=float)), phi)

    def eval_batch(self, P, phis):
        return tf_eval_batch(self.exps, self.fharm, self.fkind, self.coeffs,
                             np.asarray(P, dtype=float),
                             np.asarray(phis, dtype=float))


class TaylorFourierMap:
    """Polynomial in p with phase-periodic O(epsilon) coefficients."""

    def __init__(self, n, n_out, epsilon=1.0, omega=0.0, taylor_order=None,
                 harmonics=(), aut=None, per=None, meta=None):
        self.n = int(n)
        self.n_out = int(n_out)
        self.epsilon = float(epsilon)
        self.omega = float(omega)
        self.harmonics = tuple(sorted(set(int(h) for h in harmonics)))
        self.aut = {tuple(e): np.asarray(v, dtype=complex).reshape(n_out)
                    for e, v in (aut or {}).items()}
        self.per = {(int(h), tuple(e)): np.asarray(v, dtype=complex).reshape(n_out)
                    for (h, e), v in (per or {}).items()}
        degs = [sum(e) for e in self.aut] + [sum(e) for _, e in self.per]
        self.taylor_order = (int(taylor_order) if taylor_order is not None
                             else max(degs, default=0))
        self.meta = dict(meta or {})

    # -- evaluation -----------------------------------------------------

    def _monomials(self, p):
        p = np.asarray(p)
        out = {}
        for e in set(list(self.aut) + [e for _, e in self.per]):
            mono = 1.0 + 0.0j
            for d, k in enumerate(e):
                if k:
                    mono = mono * p[d] ** k
            out[e] = mono
        return out

    def eval_complex(self, p, phi=0.0):
        p = np.atleast_1d(np.asarray(p, dtype=complex))
        mono = self._monomials(p)
        acc = np.zeros(self.n_out, dtype=complex)
        for e, v in self.aut.items():
            acc += mono[e] * v
        if self.per:
            for (h, e), v in self.per.items():
                acc += self.epsilon * mono[e] * np.exp(1j * h * phi) * v
        return acc

    def eval(self, p, phi=0.0, imag_tol=1e-9):
        """Real-valued evaluation; raises if the imaginary residue is large.

        Admissible p means real entries for real master modes and
        conjugate pairs for complex ones; anything else legitimately has
        an imaginary part and is rejected here.
        """
        val = self.eval_complex(p, phi)
        scale = max(1.0, float(np.max(np.abs(val))))
        if np.max(np.abs(val.imag)) > imag_tol * scale:
            raise ValueError("evaluation is not real: inadmissible p or "
                             "asymmetric coefficients")
        return val.real

    def dp(self, p, phi=0.0):
        """Jacobian with respect to p, complex (n_out, n)."""
        p = np.atleast_1d(np.asarray(p, dtype=complex))
        out = np.zeros((self.n_out, self.n), dtype=complex)
        for i in range(self.n):
            for e, v in self.aut.items():
                if e[i]:
                    out[:, i] += e[i] * self._mono_minus(p, e, i) * v
            for (h, e), v in self.per.items():
                if e[i]:
                    out[:, i] += (self.epsilon * e[i]
                                  * self._mono_minus(p, e, i)
                                  * np.exp(1j * h * phi) * v)
        return out

    def _mono_minus(self, p, e, i):
        mono = 1.0 + 0.0j
        for d, k in enumerate(e):
            kk = k - 1 if d == i else k
            if kk:
                mono = mono * p[d] ** kk
        return mono

    def dphi(self, p, phi=0.0):
        p = np.atleast_1d(np.asarray(p, dtype=complex))
        mono = self._monomials(p)
        acc = np.zeros(self.n_out, dtype=complex)
        for (h, e), v in self.per.items():
            acc += self.epsilon * mono[e] * (1j * h) * np.exp(1j * h * phi) * v
        return acc

    # -- structure ------------------------------------------------------

    def degree_coefficients(self, j):
        return {e: v for e, v in self.aut.items() if sum(e) == j}

    def harmonic_coefficients(self, j, h):
        return {e: v for (hh, e), v in self.per.items()
                if hh == h and sum(e) == j}

    @classmethod
    def linear_combination(cls, maps, weights):
        """Weighted sum of structurally compatible maps."""
        base = maps[0]
        aut = {}
        per = {}
        for m, w in zip(maps, weights):
            for e, v in m.aut.items():
                aut[e] = aut.get(e, 0.0) + w * v
            for k, v in m.per.items():
                per[k] = per.get(k, 0.0) + w * v
        harmonics = tuple(sorted({h for m in maps for h in m.harmonics}))
        return cls(base.n, base.n_out, epsilon=base.epsilon, omega=base.omega,
                   taylor_order=max(m.taylor_order for m in maps),
                   harmonics=harmonics, aut=aut, per=per, meta=dict(base.meta))

    @classmethod
    def merged(cls, aut_map, per_map, epsilon, omega):
        """Combine an autonomous solve with its periodic correction."""
        per = dict(per_map.per) if per_map is not None else {}
        harmonics = per_map.harmonics if per_map is not None else ()
        return cls(aut_map.n, aut_map.n_out, epsilon=epsilon, omega=omega,
                   taylor_order=max(aut_map.taylor_order,
                                    per_map.taylor_order if per_map else 0),
                   harmonics=harmonics, aut=dict(aut_map.aut), per=per,
                   meta=dict(aut_map.meta))

    def projected(self, M):
        """New map with outputs premultiplied by the matrix M."""
        M = np.asarray(M)
        aut = {e: M @ v for e, v in self.aut.items()}
        per = {k: M @ v for k, v in self.per.items()}
        return TaylorFourierMap(self.n, M.shape[0], epsilon=self.epsilon,
                                omega=self.omega,
                                taylor_order=self.taylor_order,
                                harmonics=self.harmonics, aut=aut, per=per)

    # -- packing --------------------------------------------------------

    def is_real_representable(self, tol=1e-9):
        scale = self._coeff_scale()
        for v in self.aut.values():
            if np.max(np.abs(v.imag)) > tol * scale:
                return False
        for (h, e), v in self.per.items():
            partner = self.per.get((-h, e))
            if partner is None or np.max(np.abs(v - partner.conj())) > tol * scale:
                return False
        return True

    def _coeff_scale(self):
        vals = [np.max(np.abs(v)) for v in self.aut.values()]
        vals += [np.max(np.abs(v)) for v in self.per.values()]
        return max(vals, default=1.0) or 1.0

    def pack(self):
        """Real cos/sin packed form with epsilon folded in.

        Requires real-representable coefficients (real master spectrum and
        conjugate-symmetric harmonics).
        """
        if not self.is_real_representable():
            raise ValueError("map is not representable with real "
                             "cos/sin coefficients")
        exps = sorted(set(list(self.aut) + [e for _, e in self.per]),
                      key=lambda e: (sum(e), e))
        pos_h = sorted({abs(h) for h, _ in self.per if h != 0})
        funcs = [(0, 0)] + [(h, k) for h in pos_h for k in (0, 1)]
        coeffs = np.zeros((len(exps), len(funcs), self.n_out))
        findex = {f: i for i, f in enumerate(funcs)}
        for t, e in enumerate(exps):
            v = self.aut.get(e)
            if v is not None:
                coeffs[t, 0] += v.real
            v = self.per.get((0, e))
            if v is not None:
                coeffs[t, 0] += self.epsilon * v.real
            for h in pos_h:
                v = self.per.get((h, e))
                if v is not None:
                    coeffs[t, findex[(h, 0)]] += self.epsilon * 2.0 * v.real
                    coeffs[t, findex[(h, 1)]] += self.epsilon * -2.0 * v.imag
        return TFPack(
            exps=np.array(exps, dtype=np.int64).reshape(len(exps), self.n),
            fharm=np.array([f[0] for f in funcs], dtype=np.int64),
            fkind=np.array([f[1] for f in funcs], dtype=np.int64),
            coeffs=coeffs)

    # -- serialization --------------------------------------------------

    def to_dict(self):
        aut = [{"exps": list(e),
                "real": [float(x) for x in v.real],
                "imag": [float(x) for x in v.imag]}
               for e, v in sorted(self.aut.items())]
        per = [{"harmonic": h, "exps": list(e),
                "real": [float(x) for x in v.real],
                "imag": [float(x) for x in v.imag]}
               for (h, e), v in sorted(self.per.items())]
        return {"n": self.n, "n_out": self.n_out, "epsilon": self.epsilon,
                "omega": self.omega, "taylor_order": self.taylor_order,
                "harmonics": list(self.harmonics),
                "autonomous": aut, "periodic": per}

    @classmethod
    def from_dict(cls, doc):
        aut = {tuple(t["exps"]): np.array(t["real"]) + 1j * np.array(t["imag"])
               for t in doc["autonomous"]}
        per = {(t["harmonic"], tuple(t["exps"])):
               np.array(t["real"]) + 1j * np.array(t["imag"])
               for t in doc["periodic"]}
        return cls(doc["n"], doc["n_out"], epsilon=doc["epsilon"],
                   omega=doc["omega"], taylor_order=doc["taylor_order"],
                   harmonics=tuple(doc["harmonics"]), aut=aut, per=per)


@dataclass
class ReducedModel:
    """Solved reduction: the lift W and the reduced dynamics R, plus the
    ingredients the solve was conditioned on."""

    system: object
    spec: object
    lift_map: TaylorFourierMap
    rdyn_map: TaylorFourierMap
    controller: object = None
    trust_radius: float = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.rdyn_map.n_out

    @property
    def omega(self):
        return self.lift_map.omega

    def in_trust_region(self, p):
        if self.trust_radius is None:
            return True
        return float(np.linalg.norm(np.atleast_1d(p))) <= self.trust_radius

    def lift(self, p, phi=0.0):
        """Map reduced coordinates and phase to the full state space."""
        return self.lift_map.eval(p, phi)

    def lift_checked(self, p, phi=0.0):
        return self.lift_map.eval(p, phi), self.in_trust_region(p)

    def reduced_rhs(self, p, phi=0.0):
        return self.rdyn_map.eval(p, phi)

    def reduced_rhs_complex(self, p, phi=0.0):
        return self.rdyn_map.eval_complex(p, phi)

    def project(self, x):
        """Reduced coordinates of a full state: left-eigenvector projection
        onto E along the spectral complement."""
        p = self.spec.master_left() @ np.asarray(x, dtype=complex)
        if self.spec.master_is_real:
            return p.real
        return p
