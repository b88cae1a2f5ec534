# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; packed-array formats documented in ``pyk``."""

import numpy as np

from libc.math cimport cos, sin


cdef inline double _ipow(double base, long e) nogil:
    cdef double r = 1.0
    cdef long i
    for i in range(e):
        r *= base
    return r


cdef void _poly_eval(const long[:, ::1] exps, const double[:, ::1] coeffs,
                     const double[::1] x, double[::1] out) nogil:
    cdef Py_ssize_t t, d, k
    cdef Py_ssize_t nt = exps.shape[0]
    cdef Py_ssize_t nd = exps.shape[1]
    cdef Py_ssize_t no = coeffs.shape[1]
    cdef double mono
    for k in range(no):
        out[k] = 0.0
    for t in range(nt):
        mono = 1.0
        for d in range(nd):
            mono *= _ipow(x[d], exps[t, d])
        for k in range(no):
            out[k] += mono * coeffs[t, k]


cdef void _tf_eval(const long[:, ::1] exps, const long[::1] fharm,
                   const long[::1] fkind, const double[:, :, ::1] coeffs,
                   const double[::1] p, double phi, double[::1] basis,
                   double[::1] out) nogil:
    cdef Py_ssize_t t, d, f, k
    cdef Py_ssize_t nt = exps.shape[0]
    cdef Py_ssize_t nd = exps.shape[1]
    cdef Py_ssize_t nf = coeffs.shape[1]
    cdef Py_ssize_t no = coeffs.shape[2]
    cdef double mono, acc
    for f in range(nf):
        if fkind[f] == 0:
            basis[f] = cos(fharm[f] * phi)
        else:
            basis[f] = sin(fharm[f] * phi)
    for k in range(no):
        out[k] = 0.0
    for t in range(nt):
        mono = 1.0
        for d in range(nd):
            mono *= _ipow(p[d], exps[t, d])
        for f in range(nf):
            acc = mono * basis[f]
            for k in range(no):
                out[k] += acc * coeffs[t, f, k]


def poly_eval(exps, coeffs, x):
    out = np.zeros(coeffs.shape[1])
    x = np.ascontiguousarray(x, dtype=np.float64)
    if exps.shape[0]:
        _poly_eval(exps, coeffs, x, out)
    return out


def poly_eval_batch(exps, coeffs, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    out = np.zeros((X.shape[0], coeffs.shape[1]))
    cdef Py_ssize_t s
    cdef const long[:, ::1] ev = exps
    cdef const double[:, ::1] cv = coeffs
    cdef const double[:, ::1] Xv = X
    cdef double[:, ::1] ov = out
    if exps.shape[0]:
        for s in range(Xv.shape[0]):
            _poly_eval(ev, cv, Xv[s], ov[s])
    return out


def tf_eval(exps, fharm, fkind, coeffs, p, phi):
    out = np.zeros(coeffs.shape[2])
    basis = np.empty(coeffs.shape[1])
    p = np.ascontiguousarray(p, dtype=np.float64)
    if exps.shape[0]:
        _tf_eval(exps, fharm, fkind, coeffs, p, phi, basis, out)
    return out


def tf_eval_batch(exps, fharm, fkind, coeffs, P, phis):
    P = np.ascontiguousarray(P, dtype=np.float64)
    phis = np.ascontiguousarray(phis, dtype=np.float64)
    out = np.zeros((P.shape[0], coeffs.shape[2]))
    basis = np.empty(coeffs.shape[1])
    cdef Py_ssize_t s
    cdef const long[:, ::1] ev = exps
    cdef const long[::1] hv = fharm
    cdef const long[::1] kv = fkind
    cdef const double[:, :, ::1] cv = coeffs
    cdef const double[:, ::1] Pv = P
    cdef const double[::1] phv = phis
    cdef double[::1] bv = basis
    cdef double[:, ::1] ov = out
    if exps.shape[0]:
        for s in range(Pv.shape[0]):
            _tf_eval(ev, hv, kv, cv, Pv[s], phv[s], bv, ov[s])
    return out


def rom_rk4(exps, fharm, fkind, coeffs, p0, t0, dt, nsteps, omega):
    cdef Py_ssize_t n = p0.shape[0]
    out = np.empty((nsteps + 1, n))
    p0 = np.ascontiguousarray(p0, dtype=np.float64)
    basis = np.empty(coeffs.shape[1])
    scratch = np.empty((5, n))

    cdef const long[:, ::1] ev = exps
    cdef const long[::1] hv = fharm
    cdef const long[::1] kv = fkind
    cdef const double[:, :, ::1] cv = coeffs
    cdef double[::1] bv = basis
    cdef double[:, ::1] ov = out
    cdef double[:, ::1] sv = scratch
    cdef double[::1] p = np.array(p0)
    cdef double t0_ = t0, dt_ = dt, om = omega
    cdef Py_ssize_t ns = nsteps
    cdef Py_ssize_t i, j
    cdef double t

    for j in range(n):
        ov[0, j] = p[j]
    with nogil:
        for i in range(ns):
            t = t0_ + i * dt_
            _tf_eval(ev, hv, kv, cv, p, om * t, bv, sv[0])
            for j in range(n):
                sv[4, j] = p[j] + 0.5 * dt_ * sv[0, j]
            _tf_eval(ev, hv, kv, cv, sv[4], om * (t + 0.5 * dt_), bv, sv[1])
            for j in range(n):
                sv[4, j] = p[j] + 0.5 * dt_ * sv[1, j]
            _tf_eval(ev, hv, kv, cv, sv[4], om * (t + 0.5 * dt_), bv, sv[2])
            for j in range(n):
                sv[4, j] = p[j] + dt_ * sv[2, j]
            _tf_eval(ev, hv, kv, cv, sv[4], om * (t + dt_), bv, sv[3])
            for j in range(n):
                p[j] = p[j] + (dt_ / 6.0) * (sv[0, j] + 2.0 * sv[1, j]
                                             + 2.0 * sv[2, j] + sv[3, j])
                ov[i + 1, j] = p[j]
    return out


cdef void _fom_rhs(const double[:, ::1] A,
                   const long[:, ::1] f_exps, const double[:, ::1] f_coeffs,
                   const long[:, ::1] c_exps, const double[:, ::1] c_coeffs,
                   const long[::1] c_idx, const double[:, ::1] H, double eps,
                   const long[:, ::1] k_exps, const long[::1] k_fharm,
                   const long[::1] k_fkind, const double[:, :, ::1] k_coeffs,
                   const double[::1] x, double phi,
                   double[::1] y, double[::1] u, double[::1] basis,
                   double[::1] out) nogil:
    cdef Py_ssize_t N = A.shape[0]
    cdef Py_ssize_t o = H.shape[0]
    cdef Py_ssize_t i, j, t, d, k
    cdef double mono, s
    for i in range(o):
        s = 0.0
        for j in range(N):
            s += H[i, j] * x[j]
        y[i] = s
    _tf_eval(k_exps, k_fharm, k_fkind, k_coeffs, y, phi, basis, u)
    for i in range(N):
        s = 0.0
        for j in range(N):
            s += A[i, j] * x[j]
        out[i] = s
    for t in range(f_exps.shape[0]):
        mono = 1.0
        for d in range(N):
            mono *= _ipow(x[d], f_exps[t, d])
        for k in range(N):
            out[k] += mono * f_coeffs[t, k]
    for t in range(c_exps.shape[0]):
        mono = 1.0
        for d in range(N):
            mono *= _ipow(x[d], c_exps[t, d])
        mono *= eps * u[c_idx[t]]
        for k in range(N):
            out[k] += mono * c_coeffs[t, k]


def fom_rk4(A, f_exps, f_coeffs, c_exps, c_coeffs, c_idx, H, eps,
            k_exps, k_fharm, k_fkind, k_coeffs, x0, t0, dt, nsteps, omega):
    cdef Py_ssize_t N = x0.shape[0]
    out = np.empty((nsteps + 1, N))
    y = np.empty(H.shape[0])
    u = np.empty(k_coeffs.shape[2])
    basis = np.empty(k_coeffs.shape[1])
    scratch = np.empty((5, N))

    cdef const double[:, ::1] Av = A
    cdef const long[:, ::1] fev = f_exps
    cdef const double[:, ::1] fcv = f_coeffs
    cdef const long[:, ::1] cev = c_exps
    cdef const double[:, ::1] ccv = c_coeffs
    cdef const long[::1] civ = c_idx
    cdef const double[:, ::1] Hv = H
    cdef const long[:, ::1] kev = k_exps
    cdef const long[::1] khv = k_fharm
    cdef const long[::1] kkv = k_fkind
    cdef const double[:, :, ::1] kcv = k_coeffs
    cdef double[::1] yv = y, uv = u, bv = basis
    cdef double[:, ::1] sv = scratch
    cdef double[:, ::1] ov = out
    cdef double[::1] x = np.ascontiguousarray(x0, dtype=np.float64).copy()
    cdef double eps_ = eps, t0_ = t0, dt_ = dt, om = omega
    cdef Py_ssize_t ns = nsteps
    cdef Py_ssize_t i, j
    cdef double t

    for j in range(N):
        ov[0, j] = x[j]
    with nogil:
        for i in range(ns):
            t = t0_ + i * dt_
            _fom_rhs(Av, fev, fcv, cev, ccv, civ, Hv, eps_, kev, khv, kkv,
                     kcv, x, om * t, yv, uv, bv, sv[0])
            for j in range(N):
                sv[4, j] = x[j] + 0.5 * dt_ * sv[0, j]
            _fom_rhs(Av, fev, fcv, cev, ccv, civ, Hv, eps_, kev, khv, kkv,
                     kcv, sv[4], om * (t + 0.5 * dt_), yv, uv, bv, sv[1])
            for j in range(N):
                sv[4, j] = x[j] + 0.5 * dt_ * sv[1, j]
            _fom_rhs(Av, fev, fcv, cev, ccv, civ, Hv, eps_, kev, khv, kkv,
                     kcv, sv[4], om * (t + 0.5 * dt_), yv, uv, bv, sv[2])
            for j in range(N):
                sv[4, j] = x[j] + dt_ * sv[2, j]
            _fom_rhs(Av, fev, fcv, cev, ccv, civ, Hv, eps_, kev, khv, kkv,
                     kcv, sv[4], om * (t + dt_), yv, uv, bv, sv[3])
            for j in range(N):
                x[j] = x[j] + (dt_ / 6.0) * (sv[0, j] + 2.0 * sv[1, j]
                                             + 2.0 * sv[2, j] + sv[3, j])
                ov[i + 1, j] = x[j]
    return out
