"""Invariance-equation solver for the slow manifold and its periodic
correction.

The manifold is parametrized graph-style over the modal coordinates of the
selected slow subspace E: with x = V xi and xi split into master part p and
enslaved part, the graph w(p, phi) gives the enslaved modal coordinates.
Matching powers of p (and harmonics of phi at first order in the control
scaling) turns the invariance condition into a triangular sequence of
diagonal linear solves, one per (degree, harmonic, multi-index).
"""

import itertools

import numpy as np

from . import series
from .taylor_fourier import ReducedModel, TaylorFourierMap


class ResonanceError(ArithmeticError):
    """Inner resonance: cohomological operator singular at some degree."""

    def __init__(self, degree, eigenvalue, detail=""):
        self.degree = degree
        self.eigenvalue = eigenvalue
        super().__init__(
            f"resonant cohomological operator at degree {degree}, "
            f"eigenvalue {eigenvalue:.8g} {detail}".rstrip())


class ForcingResonanceError(ArithmeticError):
    """h*Omega hits a spectral difference: periodic solve singular."""

    def __init__(self, degree, harmonic, eigenvalue):
        self.degree = degree
        self.harmonic = harmonic
        self.eigenvalue = eigenvalue
        super().__init__(
            f"forcing resonance at degree {degree}, harmonic {harmonic}, "
            f"eigenvalue {eigenvalue:.8g}")


class HarmonicSetError(ValueError):
    """Controller harmonics outside the solver's harmonic set."""


def _multi_indices(n, degree):
    for combo in itertools.combinations_with_replacement(range(n), degree):
        e = [0] * n
        for i in combo:
            e[i] += 1
        yield tuple(e)


def _unit_exp(n, i):
    e = [0] * n
    e[i] = 1
    return tuple(e)


def solve_autonomous(system, spec, order, r_order=None, resonance_tol=1e-8):
    """Solve the autonomous invariance equation up to the given order.

    Returns the pair (W0, R0): the lift of the manifold tangent to E and
    the reduced dynamics on it, both as autonomous Taylor maps. The
    reduced coordinate is the modal coordinate of E (graph-style), so the
    degree-1 coefficients are the master eigenvectors and eigenvalues.
    """
    if not spec.master_indices:
        raise ValueError("master subspace not selected")
    if order < 1:
        raise ValueError("order must be >= 1")
    r_order = order if r_order is None else r_order
    n = spec.n
    N = system.N
    V = spec.right_vectors
    U_E = spec.master_left()
    U_F = spec.slave_left()
    V_F = spec.slave_right()
    lam_E = spec.master_eigenvalues
    lam_F = spec.slave_eigenvalues
    tol = resonance_tol * max(1.0, float(np.max(np.abs(spec.eigenvalues))))

    # state components as scalar polynomials in p; start from the inclusion
    x_of_p = [{} for _ in range(N)]
    for i, col in enumerate(spec.master_indices):
        e = _unit_exp(n, i)
        for d in range(N):
            if V[d, col] != 0:
                series.add_into(x_of_p[d], e, complex(V[d, col]))

    w = {}       # enslaved modal graph, exp -> (N-n,) complex
    aut_R = {}   # reduced dynamics, exp -> (n,) complex
    for i in range(n):
        vec = np.zeros(n, dtype=complex)
        vec[i] = lam_E[i]
        aut_R[_unit_exp(n, i)] = vec

    f_exps, f_coeffs = system.f0.exps, system.f0.coeffs
    for j in range(2, order + 1):
        comp = series.compose_field(f_exps, f_coeffs, x_of_p, n, j)
        comp_j = series.degree_slice(comp, j)
        if j <= r_order:
            for e, v in comp_j.items():
                aut_R[e] = U_E @ v
        # known lower-order transport: sum_i dw/dp_i * (R0 nonlinear)_i
        r_nl = [{e: v[i] for e, v in aut_R.items() if sum(e) >= 2}
                for i in range(n)]
        cross = series.dot_grad(w, r_nl, j)
        cross_j = series.degree_slice(cross, j)
        for e in _multi_indices(n, j):
            rhs = np.zeros(N - n, dtype=complex)
            if e in comp_j:
                rhs += U_F @ comp_j[e]
            if e in cross_j:
                rhs -= cross_j[e]
            if not np.any(rhs):
                continue
            lam_alpha = complex(np.dot(e, lam_E))
            denom = lam_alpha - lam_F
            bad = np.abs(denom) <= tol
            if np.any(bad):
                raise ResonanceError(j, lam_F[np.argmax(bad)])
            coeff = rhs / denom
            w[e] = coeff
            delta = V_F @ coeff
            for d in range(N):
                if delta[d] != 0:
                    series.add_into(x_of_p[d], e, complex(delta[d]))

    aut_W = {}
    for i, col in enumerate(spec.master_indices):
        aut_W[_unit_exp(n, i)] = V[:, col].astype(complex)
    for e, coeff in w.items():
        aut_W[e] = V_F @ coeff

    W0 = TaylorFourierMap(n, N, epsilon=system.epsilon, taylor_order=order,
                          aut=aut_W, meta={"parametrization": "graph"})
    R0 = TaylorFourierMap(n, n, epsilon=system.epsilon, taylor_order=r_order,
                          aut=aut_R)
    return W0, R0


def _modal_graph(spec, W0):
    """Recover the enslaved modal graph from a state-space lift."""
    U_F = spec.slave_left()
    w = {}
    for e, v in W0.aut.items():
        if sum(e) < 2:
            continue
        w[e] = U_F @ v
    return w


def _controller_polynomials(controller, y_of_p, n, kmax):
    """kappa per harmonic as scalar polynomials in p, complex exp(i h phi)
    convention. Returns dict harmonic -> list of m scalar polynomials."""
    o = controller.o
    out = {}
    # cache powers of the output polynomials
    for h in controller.harmonics:
        comps = []
        for i in range(controller.m):
            poly = {}
            for j in range(controller.taylor_order + 1):
                D = controller.complex_tensor(j, h)
                if not np.any(D):
                    continue
                for idx in itertools.product(range(o), repeat=j):
                    coeff = D[(i,) + idx]
                    if coeff == 0:
                        continue
                    prod = {(0,) * n: complex(coeff)}
                    for k in idx:
                        prod = series.mul(prod, y_of_p[k], kmax)
                        if not prod:
                            break
                    poly = series.plus(poly, prod)
            comps.append(poly)
        out[h] = comps
    return out


def solve_periodic_correction(system, spec, W0, R0, controller, omega,
                              order=1, harmonics=(-1, 0, 1),
                              resonance_tol=1e-8):
    """First-order periodic correction of the manifold under feedback.

    Solves the order-epsilon invariance terms for the given controller,
    degree by degree and harmonic by harmonic, including the phase
    transport term i*h*Omega. Returns (W1, R1) whose coefficients are
    linear in the controller coefficients at fixed (W0, R0).
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    harmonics = tuple(sorted(set(int(h) for h in harmonics)))
    missing = set(controller.harmonics) - set(harmonics)
    if missing:
        raise HarmonicSetError(
            f"controller harmonics {sorted(missing)} outside solver set "
            f"{harmonics}")
    if controller.o != system.o or controller.m != system.m:
        raise ValueError("controller dimensions do not match the system")

    n = spec.n
    N = system.N
    V = spec.right_vectors
    U_E = spec.master_left()
    U_F = spec.slave_left()
    V_F = spec.slave_right()
    lam_E = spec.master_eigenvalues
    lam_F = spec.slave_eigenvalues
    tol = resonance_tol * max(1.0, float(np.max(np.abs(spec.eigenvalues))))

    x_of_p = [{e: v[d] for e, v in W0.aut.items() if v[d] != 0}
              for d in range(N)]
    w0 = _modal_graph(spec, W0)
    r_nl = [{e: v[i] for e, v in R0.aut.items() if sum(e) >= 2}
            for i in range(n)]
    y_of_p = []
    for r in range(system.o):
        poly = {}
        for d in range(N):
            if system.H[r, d] != 0:
                poly = series.plus(poly,
                                   series.scaled(x_of_p[d], system.H[r, d]))
        y_of_p.append(poly)

    kappa = _controller_polynomials(controller, y_of_p, n, order)
    # forcing g_h = sum_i f_i(W0) * kappa_{i,h}
    g = {h: {} for h in harmonics}
    fi_comp = [series.compose_field(f.exps, f.coeffs, x_of_p, n, order)
               for f in system.controls]
    for h, comps in kappa.items():
        acc = {}
        for i, poly in enumerate(comps):
            if poly and fi_comp[i]:
                acc = series.plus(acc, series.mul(poly, fi_comp[i], order))
        g[h] = acc

    # Jacobian of f0 composed with the autonomous lift
    jac_fields = system.f0.jacobian_fields()
    jcomp = [series.compose_field(jf.exps, jf.coeffs, x_of_p, n, order)
             for jf in jac_fields]

    w1 = {h: {} for h in harmonics}
    r1 = {}

    def assemble_G(h):
        acc = dict(g[h])
        for d in range(N):
            if not jcomp[d]:
                continue
            # d-th state perturbation of the enslaved correction
            delta_d = {}
            for e, coeff in w1[h].items():
                val = complex(V_F[d] @ coeff)
                if val != 0:
                    delta_d[e] = val
            if delta_d:
                acc = series.plus(acc, series.mul(delta_d, jcomp[d], order))
        return acc

    for h in harmonics:
        for j in range(order + 1):
            G = assemble_G(h)
            UFG = {e: U_F @ v for e, v in G.items()}
            UEG_comps = [{e: (U_E @ v)[i] for e, v in G.items()}
                         for i in range(n)]
            cross1 = series.dot_grad(w0, UEG_comps, order)
            cross2 = series.dot_grad(w1[h], r_nl, order)
            for e in _multi_indices(n, j):
                rhs = np.zeros(N - n, dtype=complex)
                if e in UFG:
                    rhs += UFG[e]
                if e in cross1:
                    rhs -= cross1[e]
                if e in cross2:
                    rhs -= cross2[e]
                if not np.any(rhs):
                    continue
                lam_alpha = complex(np.dot(e, lam_E))
                denom = lam_alpha + 1j * h * omega - lam_F
                bad = np.abs(denom) <= tol
                if np.any(bad):
                    raise ForcingResonanceError(j, h, lam_F[np.argmax(bad)])
                w1[h][e] = rhs / denom
        # reduced correction from the final forcing assembly
        G = assemble_G(h)
        for e, v in G.items():
            if sum(e) <= order:
                r1[(h, e)] = U_E @ v

    per_W = {}
    for h, coeffs in w1.items():
        for e, coeff in coeffs.items():
            per_W[(h, e)] = V_F @ coeff
    W1 = TaylorFourierMap(n, N, epsilon=system.epsilon, omega=omega,
                          taylor_order=order, harmonics=harmonics,
                          per=per_W)
    R1 = TaylorFourierMap(n, n, epsilon=system.epsilon, omega=omega,
                          taylor_order=order, harmonics=harmonics, per=r1)
    return W1, R1


def solve_unit_responses(system, spec, W0, R0, family, omega, order=1,
                         harmonics=(-1, 0, 1), resonance_tol=1e-8):
    """Periodic corrections for unit controller coefficients.

    The order-epsilon solve is linear in the controller coefficients, so
    the correction for an arbitrary coefficient vector is the matching
    linear combination of these unit responses (see
    :func:`superpose_responses`); the direct re-solve is the reference.
    """
    responses = []
    for k in range(family.n_params):
        unit = np.zeros(family.n_params)
        unit[k] = 1.0
        ctl = family.with_flat(unit)
        responses.append(solve_periodic_correction(
            system, spec, W0, R0, ctl, omega, order=order,
            harmonics=harmonics, resonance_tol=resonance_tol))
    return responses


def superpose_responses(responses, dvec):
    W1 = TaylorFourierMap.linear_combination([r[0] for r in responses], dvec)
    R1 = TaylorFourierMap.linear_combination([r[1] for r in responses], dvec)
    return W1, R1


def restrict_reduced_dynamics(system, spec, lift, controller=None,
                              r_order=None, harmonic_cap=4):
    """Reduced dynamics as the exact restriction of the vector field to
    the parametrized manifold.

    Projects the full right-hand side onto E along the spectral
    complement with the manifold lift substituted for the state:

        R(p, phi) = Lambda_E p + U_E f0(W(p, phi))
                    + eps * U_E g(W(p, phi), phi).

    Unlike the order-matched correction, this composition keeps the
    cross terms the truncated expansion drops (feedback reacting to the
    periodic displacement of the orbit, for instance), which is what
    closed-loop simulation and controller optimization should integrate.
    The result is re-expanded as a Taylor-Fourier bundle truncated at
    ``r_order`` in p and ``harmonic_cap`` in the harmonics, with the
    control scaling folded into the stored coefficients.
    """
    n = spec.n
    N = system.N
    r_order = lift.taylor_order if r_order is None else r_order
    lam_E = spec.master_eigenvalues
    U_E = spec.master_left()
    eps = system.epsilon
    hmax = int(harmonic_cap)

    # lift components as harmonic polynomials with epsilon folded in
    x_comps = [{} for _ in range(N)]
    for e, v in lift.aut.items():
        for d in range(N):
            if v[d] != 0:
                series.hp_add_into(x_comps[d], (0, e), complex(v[d]))
    for (h, e), v in lift.per.items():
        for d in range(N):
            if v[d] != 0:
                series.hp_add_into(x_comps[d], (h, e), eps * complex(v[d]))

    acc = {}
    for i in range(n):
        key = (0, _unit_exp(n, i))
        vec = np.zeros(n, dtype=complex)
        vec[i] = lam_E[i]
        series.hp_add_into(acc, key, vec)

    f0_comp = series.hp_compose_field(system.f0.exps, system.f0.coeffs,
                                      x_comps, n, r_order, hmax)
    for k, v in f0_comp.items():
        series.hp_add_into(acc, k, U_E @ v)

    if controller is not None:
        y_comps = []
        for r in range(system.o):
            poly = {}
            for d in range(N):
                if system.H[r, d] != 0:
                    poly = series.hp_plus(
                        poly, series.hp_scaled(x_comps[d], system.H[r, d]))
            y_comps.append(poly)
        for i, f in enumerate(system.controls):
            kappa_i = {}
            for j in range(controller.taylor_order + 1):
                for h in controller.harmonics:
                    D = controller.complex_tensor(j, h)
                    if not np.any(D):
                        continue
                    for idx in itertools.product(range(system.o), repeat=j):
                        coeff = D[(i,) + idx]
                        if coeff == 0:
                            continue
                        prod = {(h, (0,) * n): complex(coeff)}
                        for kk in idx:
                            prod = series.hp_mul(prod, y_comps[kk],
                                                 r_order, hmax)
                            if not prod:
                                break
                        kappa_i = series.hp_plus(kappa_i, prod)
            if not kappa_i:
                continue
            fi_comp = series.hp_compose_field(f.exps, f.coeffs, x_comps, n,
                                              r_order, hmax)
            gi = series.hp_mul(kappa_i, fi_comp, r_order, hmax)
            for k, v in gi.items():
                series.hp_add_into(acc, k, eps * (U_E @ v))

    aut = {e: v for (h, e), v in acc.items() if h == 0}
    per = {(h, e): v for (h, e), v in acc.items() if h != 0}
    harmonics = tuple(sorted({h for h, _ in per}))
    return TaylorFourierMap(n, n, epsilon=1.0, omega=lift.omega,
                            taylor_order=r_order, harmonics=harmonics,
                            aut=aut, per=per,
                            meta={"style": "restriction"})


def build_reduced_model(system, spec, W0, R0, W1=None, R1=None,
                        controller=None, omega=0.0, trust_radius=None,
                        rdyn_style="restriction", harmonic_cap=4,
                        meta=None):
    """Assemble a :class:`ReducedModel` from solved coefficient bundles.

    ``rdyn_style`` picks how the reduced vector field is represented:
    ``"restriction"`` (default) re-expands the projected field on the
    manifold; ``"matched"`` keeps the order-by-order bundle R0 + eps*R1.
    Both agree through first order in the control scaling.
    """
    lift = TaylorFourierMap.merged(W0, W1, epsilon=system.epsilon,
                                   omega=omega)
    if rdyn_style == "restriction":
        rdyn = restrict_reduced_dynamics(system, spec, lift,
                                         controller=controller,
                                         r_order=R0.taylor_order,
                                         harmonic_cap=harmonic_cap)
    elif rdyn_style == "matched":
        rdyn = TaylorFourierMap.merged(R0, R1, epsilon=system.epsilon,
                                       omega=omega)
    else:
        raise ValueError(f"unknown rdyn_style {rdyn_style!r}")
    return ReducedModel(system=system, spec=spec, lift_map=lift,
                        rdyn_map=rdyn, controller=controller,
                        trust_radius=trust_radius, meta=dict(meta or {}))


def invariance_residual(model, samples):
    """Norm of the invariance defect at each (p, phi) sample.

    Evaluates the true vector field at the lifted point against the
    manifold's tangent flow:
    A W + f0(W) + eps*g(W, phi) - DpW R - DphiW * Omega.
    """
    system = model.system
    omega = model.omega
    out = np.empty(len(samples))
    for k, (p, phi) in enumerate(samples):
        p = np.atleast_1d(p)
        x = model.lift(p, phi)
        rhs = system.A @ x + system.f0(x)
        if model.controller is not None:
            u = model.controller.eval(system.H @ x, phi)
            for ui, fi in zip(u, system.controls):
                if ui != 0.0:
                    rhs = rhs + system.epsilon * ui * fi(x)
        rhs = rhs.astype(complex)
        rhs -= model.lift_map.dp(p, phi) @ model.rdyn_map.eval_complex(p, phi)
        rhs -= model.lift_map.dphi(p, phi) * omega
        out[k] = float(np.linalg.norm(rhs))
    return out
