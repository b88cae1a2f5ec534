"""Truncated multivariate polynomial arithmetic.

A polynomial in n variables is a dict mapping exponent tuples to complex
coefficients; coefficients are either scalars or 1-d numpy arrays (vector
coefficients), and all operations truncate above a maximum total degree.
Sizes here are tiny (n <= a few, degree <= a few), so clarity beats speed;
the hot evaluation paths use the packed kernel formats instead.
"""

import numpy as np


def zero():
    return {}


def add_into(P, e, v):
    cur = P.get(e)
    P[e] = v if cur is None else cur + v
    return P


def plus(P, Q):
    out = dict(P)
    for e, v in Q.items():
        add_into(out, e, v)
    return out


def scaled(P, a):
    return {e: a * v for e, v in P.items()}


def mul(P, Q, kmax):
    """Product of two polynomials truncated at total degree kmax.

    At least one factor must have scalar coefficients.
    """
    out = {}
    for e1, v1 in P.items():
        d1 = sum(e1)
        for e2, v2 in Q.items():
            if d1 + sum(e2) > kmax:
                continue
            e = tuple(a + b for a, b in zip(e1, e2))
            add_into(out, e, v1 * v2)
    return out


def pow_trunc(P, k, kmax):
    if k == 0:
        nvars = len(next(iter(P))) if P else 0
        return {(0,) * nvars: 1.0 + 0.0j}
    out = P
    for _ in range(k - 1):
        out = mul(out, P, kmax)
    return out


def partial(P, i):
    out = {}
    for e, v in P.items():
        if e[i] == 0:
            continue
        e2 = list(e)
        e2[i] -= 1
        add_into(out, tuple(e2), e[i] * v)
    return out


def compose_field(exps, coeffs, comps, nvars, kmax):
    """Taylor coefficients of f(W(p)) truncated at degree kmax.

    ``exps``/``coeffs`` give f in packed monomial form (see fields module);
    ``comps`` lists one scalar polynomial in the nvars entries of p per
    input variable of f. Returns a vector polynomial whose coefficients
    have f's output dimension.
    """
    out = {}
    pcache = {}
    for e, c in zip(exps, coeffs):
        prod = {(0,) * nvars: 1.0 + 0.0j}
        for d, k in enumerate(e):
            if k == 0:
                continue
            key = (d, int(k))
            if key not in pcache:
                pcache[key] = pow_trunc(comps[d], int(k), kmax)
            prod = mul(prod, pcache[key], kmax)
            if not prod:
                break
        for pe, pv in prod.items():
            add_into(out, pe, pv * np.asarray(c, dtype=complex))
    return {e: v for e, v in out.items() if np.any(v != 0)}


def degree_slice(P, j):
    return {e: v for e, v in P.items() if sum(e) == j}


def truncated(P, kmax):
    return {e: v for e, v in P.items() if sum(e) <= kmax}


def max_degree(P):
    return max((sum(e) for e in P), default=0)


def eval_tpoly(P, p):
    p = np.asarray(p)
    acc = None
    for e, v in P.items():
        mono = 1.0
        for d, k in enumerate(e):
            if k:
                mono = mono * p[d] ** k
        term = mono * v
        acc = term if acc is None else acc + term
    return acc


def dot_grad(P_components, R_components, kmax):
    """sum_i dP/dp_i * R_i for a vector polynomial P and scalar R_i."""
    nvars = len(R_components)
    out = {}
    for i in range(nvars):
        dP = partial(P_components, i)
        if not dP or not R_components[i]:
            continue
        out = plus(out, mul(R_components[i], dP, kmax))
    return out


# -- harmonic polynomials --------------------------------------------------
# Keys are (h, exp): an integer harmonic (coefficient of e^{i h phi}) and a
# monomial exponent tuple. Total degree counts only the monomial part;
# harmonics add under multiplication and are truncated at |h| <= hmax.

def hp_add_into(P, key, v):
    cur = P.get(key)
    P[key] = v if cur is None else cur + v
    return P


def hp_plus(P, Q):
    out = dict(P)
    for k, v in Q.items():
        hp_add_into(out, k, v)
    return out


def hp_scaled(P, a):
    return {k: a * v for k, v in P.items()}


def hp_mul(P, Q, kmax, hmax):
    out = {}
    for (h1, e1), v1 in P.items():
        d1 = sum(e1)
        for (h2, e2), v2 in Q.items():
            if d1 + sum(e2) > kmax or abs(h1 + h2) > hmax:
                continue
            key = (h1 + h2, tuple(a + b for a, b in zip(e1, e2)))
            hp_add_into(out, key, v1 * v2)
    return out


def hp_pow(P, k, nvars, kmax, hmax):
    out = {(0, (0,) * nvars): 1.0 + 0.0j}
    for _ in range(k):
        out = hp_mul(out, P, kmax, hmax)
    return out


def hp_compose_field(exps, coeffs, comps, nvars, kmax, hmax):
    """f(W(p, phi)) for a packed field f and harmonic-polynomial components."""
    out = {}
    pcache = {}
    for e, c in zip(exps, coeffs):
        prod = {(0, (0,) * nvars): 1.0 + 0.0j}
        for d, k in enumerate(e):
            if k == 0:
                continue
            key = (d, int(k))
            if key not in pcache:
                pcache[key] = hp_pow(comps[d], int(k), nvars, kmax, hmax)
            prod = hp_mul(prod, pcache[key], kmax, hmax)
            if not prod:
                break
        for pk, pv in prod.items():
            hp_add_into(out, pk, pv * np.asarray(c, dtype=complex))
    return {k: v for k, v in out.items() if np.any(v != 0)}
