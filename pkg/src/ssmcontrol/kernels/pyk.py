"""Pure-numpy reference kernels.

Same call signatures and packed-array formats as the compiled backend
(``cyk``); used as the import-time fallback and as the ground truth the
compiled kernels are tested against.

Packed polynomial map (R^d_in -> R^d_out):
    exps   : int64 (n_terms, d_in)   monomial exponents
    coeffs : float64 (n_terms, d_out) monomial coefficient vectors

Packed Taylor-Fourier map ((p, phi) -> R^d_out):
    exps   : int64 (n_terms, n)      monomial exponents in p
    fharm  : int64 (n_funcs,)        harmonic index h >= 0 per basis function
    fkind  : int64 (n_funcs,)        0 -> cos(h*phi), 1 -> sin(h*phi)
    coeffs : float64 (n_terms, n_funcs, d_out)
"""

import numpy as np


def poly_eval(exps, coeffs, x):
    if exps.shape[0] == 0:
        return np.zeros(coeffs.shape[1])
    mono = np.prod(np.asarray(x, dtype=float) ** exps, axis=1)
    return mono @ coeffs


def poly_eval_batch(exps, coeffs, X):
    X = np.asarray(X, dtype=float)
    if exps.shape[0] == 0:
        return np.zeros((X.shape[0], coeffs.shape[1]))
    mono = np.prod(X[:, None, :] ** exps[None, :, :], axis=2)
    return mono @ coeffs


def _tf_basis(fharm, fkind, phi):
    arg = fharm * phi
    return np.where(fkind == 0, np.cos(arg), np.sin(arg))


def tf_eval(exps, fharm, fkind, coeffs, p, phi):
    if exps.shape[0] == 0:
        return np.zeros(coeffs.shape[2])
    mono = np.prod(np.asarray(p, dtype=float) ** exps, axis=1)
    basis = _tf_basis(fharm, fkind, phi)
    return np.einsum("t,f,tfk->k", mono, basis, coeffs)


def tf_eval_batch(exps, fharm, fkind, coeffs, P, phis):
    P = np.asarray(P, dtype=float)
    if exps.shape[0] == 0:
        return np.zeros((P.shape[0], coeffs.shape[2]))
    mono = np.prod(P[:, None, :] ** exps[None, :, :], axis=2)
    arg = np.outer(phis, fharm)
    basis = np.where(fkind[None, :] == 0, np.cos(arg), np.sin(arg))
    return np.einsum("st,sf,tfk->sk", mono, basis, coeffs)


def rom_rk4(exps, fharm, fkind, coeffs, p0, t0, dt, nsteps, omega):
    """Fixed-step RK4 on the reduced dynamics dp/dt = R(p, omega*t)."""
    n = p0.shape[0]
    out = np.empty((nsteps + 1, n))
    p = np.array(p0, dtype=float)
    out[0] = p
    for i in range(nsteps):
        t = t0 + i * dt
        k1 = tf_eval(exps, fharm, fkind, coeffs, p, omega * t)
        k2 = tf_eval(exps, fharm, fkind, coeffs, p + 0.5 * dt * k1,
                     omega * (t + 0.5 * dt))
        k3 = tf_eval(exps, fharm, fkind, coeffs, p + 0.5 * dt * k2,
                     omega * (t + 0.5 * dt))
        k4 = tf_eval(exps, fharm, fkind, coeffs, p + dt * k3,
                     omega * (t + dt))
        p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = p
    return out


def _fom_rhs(A, f_exps, f_coeffs, c_exps, c_coeffs, c_idx, H, eps,
             k_exps, k_fharm, k_fkind, k_coeffs, x, phi):
    y = H @ x
    u = tf_eval(k_exps, k_fharm, k_fkind, k_coeffs, y, phi)
    rhs = A @ x + poly_eval(f_exps, f_coeffs, x)
    if c_exps.shape[0]:
        mono = np.prod(x ** c_exps, axis=1)
        rhs = rhs + eps * ((mono * u[c_idx]) @ c_coeffs)
    return rhs


def fom_rk4(A, f_exps, f_coeffs, c_exps, c_coeffs, c_idx, H, eps,
            k_exps, k_fharm, k_fkind, k_coeffs, x0, t0, dt, nsteps, omega):
    """Fixed-step RK4 on the closed loop
    dx/dt = A x + f0(x) + eps * sum_i f_i(x) kappa_i(H x, omega*t)."""
    N = x0.shape[0]
    out = np.empty((nsteps + 1, N))
    x = np.array(x0, dtype=float)
    out[0] = x

    def rhs(xv, phi):
        return _fom_rhs(A, f_exps, f_coeffs, c_exps, c_coeffs, c_idx, H, eps,
                        k_exps, k_fharm, k_fkind, k_coeffs, xv, phi)

    for i in range(nsteps):
        t = t0 + i * dt
        k1 = rhs(x, omega * t)
        k2 = rhs(x + 0.5 * dt * k1, omega * (t + 0.5 * dt))
        k3 = rhs(x + 0.5 * dt * k2, omega * (t + 0.5 * dt))
        k4 = rhs(x + dt * k3, omega * (t + dt))
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = x
    return out
