"""Periodic output-feedback controller family.

u = kappa(y, phi) is a Taylor series in the measured output y whose
coefficient tensors are truncated Fourier series in the phase phi:

    kappa(y, phi) = sum_{j=0..Upsilon} D_j(phi) y^(ox j),
    D_j(phi) = C_{j,0} + sum_{h>0} C_{j,h} cos(h phi) + S_{j,h} sin(h phi).

Coefficients are kept in this real cos/sin form; the flattened coefficient
vector is what the optimizer works on.
"""

import itertools

import numpy as np

from .taylor_fourier import TFPack


def normalize_harmonics(harmonics):
    """Sorted, conjugation-closed harmonic set (h present => -h present)."""
    hs = set(int(h) for h in harmonics)
    hs |= {-h for h in hs}
    return tuple(sorted(hs))


class ControllerParams:
    """Real Taylor-Fourier coefficients of the periodic feedback law."""

    def __init__(self, m, o, taylor_order, harmonics, omega,
                 coeffs_cos=None, coeffs_sin=None):
        self.m = int(m)
        self.o = int(o)
        self.taylor_order = int(taylor_order)
        self.harmonics = normalize_harmonics(harmonics)
        self.omega = float(omega)
        if self.taylor_order < 0:
            raise ValueError("taylor_order must be >= 0")
        if not self.harmonics:
            raise ValueError("harmonic set must be non-empty")
        shape = lambda j: (self.m,) + (self.o,) * j
        self.coeffs_cos = {}
        self.coeffs_sin = {}
        for j in range(self.taylor_order + 1):
            for h in self.positive_harmonics(include_zero=True):
                src = (coeffs_cos or {}).get((j, h))
                self.coeffs_cos[(j, h)] = (
                    np.zeros(shape(j)) if src is None
                    else np.asarray(src, dtype=float).reshape(shape(j)))
            for h in self.positive_harmonics():
                src = (coeffs_sin or {}).get((j, h))
                self.coeffs_sin[(j, h)] = (
                    np.zeros(shape(j)) if src is None
                    else np.asarray(src, dtype=float).reshape(shape(j)))

    def positive_harmonics(self, include_zero=False):
        out = [h for h in self.harmonics if h > 0]
        if include_zero and 0 in self.harmonics:
            out = [0] + out
        return tuple(out)

    @property
    def gamma(self):
        return len(self.harmonics)

    @property
    def n_params(self):
        per_j = lambda j: self.gamma * self.m * self.o ** j
        return sum(per_j(j) for j in range(self.taylor_order + 1))

    @classmethod
    def zeros(cls, m, o, taylor_order, harmonics, omega):
        return cls(m, o, taylor_order, harmonics, omega)

    # -- flattening ------------------------------------------------------

    def flatten(self):
        """Deterministic coefficient vector: degrees ascending, constant
        term first, then (cos, sin) per positive harmonic, C-order."""
        parts = []
        for j in range(self.taylor_order + 1):
            if 0 in self.harmonics:
                parts.append(self.coeffs_cos[(j, 0)].ravel())
            for h in self.positive_harmonics():
                parts.append(self.coeffs_cos[(j, h)].ravel())
                parts.append(self.coeffs_sin[(j, h)].ravel())
        if not parts:
            return np.zeros(0)
        return np.concatenate(parts)

    def with_flat(self, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, "
                             f"got {vec.shape}")
        ccos, csin = {}, {}
        pos = 0
        for j in range(self.taylor_order + 1):
            size = self.m * self.o ** j
            shape = (self.m,) + (self.o,) * j
            if 0 in self.harmonics:
                ccos[(j, 0)] = vec[pos:pos + size].reshape(shape)
                pos += size
            for h in self.positive_harmonics():
                ccos[(j, h)] = vec[pos:pos + size].reshape(shape)
                pos += size
                csin[(j, h)] = vec[pos:pos + size].reshape(shape)
                pos += size
        return ControllerParams(self.m, self.o, self.taylor_order,
                                self.harmonics, self.omega,
                                coeffs_cos=ccos, coeffs_sin=csin)

    # -- evaluation ------------------------------------------------------

    def tensor_at(self, j, phi):
        D = self.coeffs_cos[(j, 0)].copy() if 0 in self.harmonics else \
            np.zeros((self.m,) + (self.o,) * j)
        for h in self.positive_harmonics():
            D = D + self.coeffs_cos[(j, h)] * np.cos(h * phi)
            D = D + self.coeffs_sin[(j, h)] * np.sin(h * phi)
        return D

    def eval(self, y, phi):
        """Control input u = sum_j D_j(phi) y^(ox j)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.shape != (self.o,):
            raise ValueError(f"expected output of length {self.o}")
        u = np.zeros(self.m)
        for j in range(self.taylor_order + 1):
            D = self.tensor_at(j, phi)
            for _ in range(j):
                D = D @ y
            u += D
        return u

    def complex_tensor(self, j, h):
        """Coefficient of e^{i h phi} in D_j(phi)."""
        shape = (self.m,) + (self.o,) * j
        if h == 0:
            if 0 in self.harmonics:
                return self.coeffs_cos[(j, 0)].astype(complex)
            return np.zeros(shape, dtype=complex)
        if abs(h) not in self.positive_harmonics():
            return np.zeros(shape, dtype=complex)
        C = self.coeffs_cos[(j, abs(h))]
        S = self.coeffs_sin[(j, abs(h))]
        if h > 0:
            return 0.5 * (C - 1j * S)
        return 0.5 * (C + 1j * S)

    def pack(self):
        """Packed Taylor-Fourier form of kappa for the kernels."""
        rows = {}
        for j in range(self.taylor_order + 1):
            for idx in itertools.product(range(self.o), repeat=j):
                e = [0] * self.o
                for k in idx:
                    e[k] += 1
                key = tuple(e)
                slot = rows.setdefault(key, {})
                for h in self.positive_harmonics(include_zero=True):
                    slot.setdefault((h, 0), np.zeros(self.m))
                    slot[(h, 0)] += self.coeffs_cos[(j, h)][(slice(None),) + idx]
                    if h > 0:
                        slot.setdefault((h, 1), np.zeros(self.m))
                        slot[(h, 1)] += self.coeffs_sin[(j, h)][(slice(None),) + idx]
        exps = sorted(rows, key=lambda e: (sum(e), e))
        funcs = [(0, 0)] + [(h, k) for h in self.positive_harmonics()
                            for k in (0, 1)]
        coeffs = np.zeros((len(exps), len(funcs), self.m))
        for t, e in enumerate(exps):
            for f, fn in enumerate(funcs):
                if fn in rows[e]:
                    coeffs[t, f] = rows[e][fn]
        return TFPack(
            exps=np.array(exps, dtype=np.int64).reshape(len(exps), self.o),
            fharm=np.array([f[0] for f in funcs], dtype=np.int64),
            fkind=np.array([f[1] for f in funcs], dtype=np.int64),
            coeffs=coeffs)

    def scaled(self, factor):
        return self.with_flat(self.flatten() * factor)

    def to_dict(self):
        return {"m": self.m, "o": self.o, "taylor_order": self.taylor_order,
                "harmonics": list(self.harmonics), "omega": self.omega,
                "flat": [float(v) for v in self.flatten()]}

    @classmethod
    def from_dict(cls, doc):
        base = cls(doc["m"], doc["o"], doc["taylor_order"],
                   tuple(doc["harmonics"]), doc["omega"])
        return base.with_flat(np.array(doc["flat"]))


def controller_eval(params, y, phi):
    return params.eval(y, phi)
