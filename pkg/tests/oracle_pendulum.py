"""Independent symbolic oracle for the pendulum graph coefficients.

Re-derives the slow-manifold graph for the two-state pendulum by plain
computer algebra: write the modal dynamics, substitute the polynomial
ansatz

    h(xi1, phi) = c1 xi1^2 + c2 xi1^3
                  + eps * (c3 + c4 cos phi + c5 sin phi
                           + xi1 (c8 + c6 cos phi + c7 sin phi)),

expand the invariance condition g2 = Dxi1 h * g1 + Dphi h * Omega in
series, and solve the coefficient-matching equations with sympy. No code
is shared with the tensor solver; only the numeric modal basis (which
defines what the coefficients mean) is taken as input.
"""

import numpy as np
import sympy as sp


def graph_coefficients(spec, pend_params, taylor_degree, up, omega,
                       epsilon=1.0):
    """Return dict c1..c8 from symbolic coefficient comparison.

    ``spec`` supplies the numeric modal basis (right eigenvectors and
    eigenvalues); ``up`` is the 6-vector of controller coefficients
    (const, cos, sin, x1*const, x1*cos, x1*sin).
    """
    m, l, g, b = (pend_params[k] for k in ("m", "l", "g", "b"))
    xi1, phi, eps = sp.symbols("xi1 phi eps", real=True)
    cs = sp.symbols("c1:9", real=True)

    V = sp.Matrix(spec.right_vectors.real.tolist())
    Vinv = V.inv()
    lam1 = sp.Float(float(spec.eigenvalues[0].real), 17)
    lam2 = sp.Float(float(spec.eigenvalues[1].real), 17)

    h0 = cs[0] * xi1 ** 2 + cs[1] * xi1 ** 3
    h1 = (cs[2] + cs[3] * sp.cos(phi) + cs[4] * sp.sin(phi)
          + xi1 * (cs[7] + cs[5] * sp.cos(phi) + cs[6] * sp.sin(phi)))
    h = h0 + eps * h1

    x = V * sp.Matrix([xi1, h])
    x1 = x[0]
    # odd Taylor series of (g/l)(x1 - sin x1)
    f0_2 = sp.Integer(0)
    sign = 1
    for k in range(3, taylor_degree + 1, 2):
        f0_2 += sign * sp.Rational(1, sp.factorial(k)) * (g / l) * x1 ** k
        sign = -sign
    kappa = (up[0] + up[1] * sp.cos(phi) + up[2] * sp.sin(phi)
             + x1 * (up[3] + up[4] * sp.cos(phi) + up[5] * sp.sin(phi)))
    Bv = sp.Matrix([0, sp.Rational(1) / (m * l ** 2)])
    gvec = (sp.Matrix([lam1 * xi1, lam2 * h]) + Vinv * sp.Matrix([0, f0_2])
            + eps * epsilon * Vinv * Bv * kappa)
    res = (gvec[1] - sp.diff(h, xi1) * gvec[0]
           - sp.diff(h, phi) * sp.Float(omega, 17))

    # order eps^0: match xi1^2 and xi1^3
    res0 = sp.expand(res.subs(eps, 0))
    p0 = sp.Poly(res0, xi1)
    eqs0 = [p0.coeff_monomial(xi1 ** 2), p0.coeff_monomial(xi1 ** 3)]
    sol0 = sp.solve(eqs0, [cs[0], cs[1]], dict=True)[0]

    # order eps^1: match {1, cos, sin} x {1, xi1}
    res1 = sp.expand(sp.diff(res, eps).subs(eps, 0).subs(sol0))
    cos_part = res1.coeff(sp.cos(phi))
    sin_part = res1.coeff(sp.sin(phi))
    const_part = sp.expand(res1 - cos_part * sp.cos(phi)
                           - sin_part * sp.sin(phi))
    eqs1 = []
    for part in (const_part, cos_part, sin_part):
        poly = sp.Poly(part, xi1)
        eqs1.append(poly.coeff_monomial(1))
        eqs1.append(poly.coeff_monomial(xi1))
    sol1 = sp.solve(eqs1, [cs[2], cs[3], cs[4], cs[5], cs[6], cs[7]],
                    dict=True)[0]

    out = {1: float(sol0[cs[0]]), 2: float(sol0[cs[1]])}
    for i, sym in enumerate([cs[2], cs[3], cs[4], cs[5], cs[6], cs[7]],
                            start=3):
        out[i] = float(sol1[sym])
    return out


def solver_graph_coefficients(spec, W0, W1):
    """Extract the same c1..c8 from the tensor solver's bundles."""
    U_F = spec.slave_left()

    def graph(vec):
        return complex((U_F @ vec)[0])

    out = {}
    out[1] = graph(W0.aut[(2,)]).real if (2,) in W0.aut else 0.0
    out[2] = graph(W0.aut[(3,)]).real if (3,) in W0.aut else 0.0
    w00 = graph(W1.per[(0, (0,))]) if (0, (0,)) in W1.per else 0j
    out[3] = w00.real
    w01 = graph(W1.per[(1, (0,))]) if (1, (0,)) in W1.per else 0j
    out[4] = 2.0 * w01.real
    out[5] = -2.0 * w01.imag
    w11 = graph(W1.per[(1, (1,))]) if (1, (1,)) in W1.per else 0j
    out[6] = 2.0 * w11.real
    out[7] = -2.0 * w11.imag
    w10 = graph(W1.per[(0, (1,))]) if (0, (1,)) in W1.per else 0j
    out[8] = w10.real
    return out
