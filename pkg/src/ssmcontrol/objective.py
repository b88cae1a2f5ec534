"""Tracking objective on the reduced model and controller synthesis.

The objective integrates the reduced dynamics from the origin, discards a
settling window of whole periods, and averages the pointwise 2-norm error
between the lifted output and the reference over the next period(s). The
periodic-orbit constraint is handled by settling rather than shooting.
Candidates whose reduced trajectory leaves the trust region (or blows up)
receive a fixed finite penalty so the optimizer can keep ranking.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .cmaes import CMAConfig, optimize_cma_es
from .integrators import IntegratorConfig, integrate
from .invariance import (build_reduced_model, solve_autonomous,
                         solve_periodic_correction, solve_unit_responses,
                         superpose_responses)
from .kernels import rom_rk4

_trapz = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class SinusoidReference:
    """Reference output z*(phi) = offset + amplitude * sin(phi), radians."""

    offset: float
    amplitude: float
    omega: float

    @property
    def period(self):
        return 2.0 * math.pi / self.omega

    def value(self, phi):
        return np.atleast_1d(self.offset + self.amplitude * np.sin(phi))

    def value_batch(self, phis):
        return (self.offset + self.amplitude * np.sin(phis))[:, None]

    def time_derivative(self, phi):
        return np.atleast_1d(self.omega * self.amplitude * np.cos(phi))


@dataclass(frozen=True)
class ObjectiveSpec:
    """What the tracking objective measures and how it integrates.

    The settling time is ``settle_periods`` whole periods; the error is
    averaged over the following ``measure_periods`` periods.
    """

    reference: object
    omega: float
    settle_periods: int = 2
    measure_periods: int = 1
    steps_per_period: int = 256
    penalty: float = None

    def __post_init__(self):
        if self.settle_periods < 0 or self.measure_periods < 1:
            raise ValueError("invalid settle/measure periods")
        if self.omega <= 0:
            raise ValueError("omega must be positive")

    @property
    def period(self):
        return 2.0 * math.pi / self.omega

    @property
    def settle_time(self):
        return self.settle_periods * self.period

    def penalty_value(self):
        if self.penalty is not None:
            return self.penalty
        phis = np.linspace(0.0, 2.0 * math.pi, 64)
        amp = float(np.max(np.linalg.norm(self.reference.value_batch(phis),
                                          axis=1)))
        return 1e6 * max(1.0, amp)


def reference_state_trajectory(system, reference, n_phase=256):
    """Least-squares state trajectory consistent with the reference.

    Stacks the output map with its first observability row (H, H A) and
    solves for the state from the reference value and rate; with no rate
    available only H is used. This is a scale estimate for trust regions,
    not a simulation: nonlinear and control terms are ignored.
    """
    phis = np.linspace(0.0, 2.0 * math.pi, n_phase, endpoint=False)
    Z = reference.value_batch(phis)
    rows = [system.H]
    rhs = [Z]
    if hasattr(reference, "time_derivative"):
        Zd = np.array([reference.time_derivative(phi) for phi in phis])
        rows.append(system.H @ system.A)
        rhs.append(Zd.reshape(n_phase, -1))
    S = np.vstack(rows)
    B = np.hstack(rhs)
    return B @ np.linalg.pinv(S).T


def trust_region_from_reference(system, spec, reference, margin=1.2,
                                n_phase=256):
    """Trust radii for the reduced coordinate and the enslaved displacement.

    Both are ``margin`` times the largest modal content of the reference
    state trajectory: the master projection bounds |p|, the slave
    projection bounds how far the evaluated manifold point may sit from
    the spectral subspace. Either radius degenerates to None (no bound)
    when the reference carries no content in that subspace.
    """
    X = reference_state_trajectory(system, reference, n_phase=n_phase)
    P = X @ spec.master_left().T
    S = X @ spec.slave_left().T
    rho_p = margin * float(np.max(np.linalg.norm(P, axis=1)))
    rho_w = margin * float(np.max(np.linalg.norm(S, axis=1)))
    scale = float(np.max(np.abs(X))) if X.size else 0.0
    rho_p = rho_p if rho_p > 1e-9 * max(1.0, scale) else None
    rho_w = rho_w if rho_w > 1e-9 * max(1.0, scale) else None
    return rho_p, rho_w


def trust_radius_from_reference(spec, H, reference, margin=1.2,
                                n_phase=256):
    """Reduced-coordinate trust radius only (see
    :func:`trust_region_from_reference`)."""
    phis = np.linspace(0.0, 2.0 * math.pi, n_phase, endpoint=False)
    Z = reference.value_batch(phis)
    X = Z @ np.linalg.pinv(H).T
    P = X @ spec.master_left().T
    return margin * float(np.max(np.linalg.norm(P, axis=1)))


def _measure_grid(ospec):
    n_settle = ospec.settle_periods * ospec.steps_per_period
    n_measure = ospec.measure_periods * ospec.steps_per_period
    dt = ospec.period / ospec.steps_per_period
    return n_settle, n_measure, dt


def tracking_objective(model, ospec):
    """Mean tracking error of the settled reduced orbit, started at p = 0.

    Integrates dp/dt = R(p, omega t) over the settle plus measure window
    with fixed-step RK4, lifts the samples, and returns the time-average
    of ||z*(omega t) - y(t)||_2 over the measure window. Candidates whose
    trajectory leaves the trust region return the penalty value; the
    trust region bounds both the reduced coordinate |p| and, when the
    model carries a ``slave_trust_radius``, the distance of the evaluated
    manifold point from the spectral subspace (the expansion is only
    trusted near the subspace it perturbs from).
    """
    system = model.system
    omega = model.omega
    n_settle, n_measure, dt = _measure_grid(ospec)
    nsteps = n_settle + n_measure
    t_all = np.arange(nsteps + 1) * dt
    if model.rdyn_map.is_real_representable():
        rpack = model.rdyn_map.pack()
        p0 = np.zeros(model.rdyn_map.n)
        P = rom_rk4(rpack.exps, rpack.fharm, rpack.fkind, rpack.coeffs,
                    p0, 0.0, dt, nsteps, omega)
        if not np.all(np.isfinite(P)):
            return ospec.penalty_value()
        X = model.lift_map.pack().eval_batch(P, omega * t_all)
    else:
        # complex master modes: generic callback integration
        p0 = np.zeros(model.rdyn_map.n, dtype=complex)
        try:
            traj = integrate(
                lambda tt, p: model.rdyn_map.eval_complex(p, omega * tt),
                p0, (0.0, nsteps * dt),
                IntegratorConfig(method="rk4_fixed"), n_samples=nsteps,
                kind="reduced")
        except RuntimeError:
            return ospec.penalty_value()
        P = traj.states
        if not np.all(np.isfinite(np.abs(P))):
            return ospec.penalty_value()
        X = np.array([model.lift(P[i], omega * t_all[i])
                      for i in range(nsteps + 1)])
    if model.trust_radius is not None:
        if float(np.max(np.linalg.norm(P, axis=1))) > model.trust_radius:
            return ospec.penalty_value()
    rho_w = model.meta.get("slave_trust_radius")
    if rho_w is not None:
        slave = np.abs(X.astype(complex) @ model.spec.slave_left().T)
        if float(np.max(np.linalg.norm(slave, axis=1))) > rho_w:
            return ospec.penalty_value()
    t = t_all[n_settle:]
    Y = (system.H @ X[n_settle:].T).T
    Z = ospec.reference.value_batch(omega * t)
    err = np.linalg.norm(Z - Y, axis=1)
    return float(_trapz(err, dx=dt) / (ospec.measure_periods
                                       * ospec.period))


class ObjectiveEvaluator:
    """Maps flattened controller coefficients to the tracking objective.

    The order-epsilon correction is linear in the coefficients, so unit
    responses are precomputed once and superposed per candidate; pass
    ``use_superposition=False`` to re-solve the correction directly
    instead (the reference path the superposition is tested against).
    """

    def __init__(self, system, spec, W0, R0, family, ospec,
                 correction_order=1, harmonics=(-1, 0, 1),
                 trust_radius=None, slave_trust_radius=None,
                 use_superposition=True):
        self.system = system
        self.spec = spec
        self.W0 = W0
        self.R0 = R0
        self.family = family
        self.ospec = ospec
        self.correction_order = correction_order
        self.harmonics = tuple(harmonics)
        rho_p, rho_w = trust_region_from_reference(system, spec,
                                                   ospec.reference)
        self.trust_radius = trust_radius if trust_radius is not None \
            else rho_p
        self.slave_trust_radius = slave_trust_radius \
            if slave_trust_radius is not None else rho_w
        self.use_superposition = use_superposition
        self._responses = None
        if use_superposition:
            self._responses = solve_unit_responses(
                system, spec, W0, R0, family, ospec.omega,
                order=correction_order, harmonics=self.harmonics)

    def correction_for(self, dvec):
        if self._responses is not None:
            return superpose_responses(self._responses, dvec)
        ctl = self.family.with_flat(dvec)
        return solve_periodic_correction(
            self.system, self.spec, self.W0, self.R0, ctl, self.ospec.omega,
            order=self.correction_order, harmonics=self.harmonics)

    def model_for(self, dvec):
        W1, R1 = self.correction_for(dvec)
        ctl = self.family.with_flat(dvec)
        return build_reduced_model(
            self.system, self.spec, self.W0, self.R0, W1, R1,
            controller=ctl, omega=self.ospec.omega,
            trust_radius=self.trust_radius,
            meta={"trust_radius": self.trust_radius,
                  "slave_trust_radius": self.slave_trust_radius})

    def evaluate(self, dvec):
        return tracking_objective(self.model_for(dvec), self.ospec)


@dataclass
class SynthesisResult:
    controller: object
    model: object
    objective_value: float
    cma: object
    evaluator: ObjectiveEvaluator = field(repr=False, default=None)


def synthesize_controller(system, spec, family, ospec, taylor_order=3,
                          correction_order=1, harmonics=(-1, 0, 1),
                          cma_config=None, use_superposition=True):
    """End-to-end synthesis: solve the manifold, then optimize the
    controller coefficients on the reduced model."""
    W0, R0 = solve_autonomous(system, spec, order=taylor_order)
    evaluator = ObjectiveEvaluator(
        system, spec, W0, R0, family, ospec,
        correction_order=correction_order, harmonics=harmonics,
        use_superposition=use_superposition)
    cma = optimize_cma_es(evaluator.evaluate, family.n_params,
                          cma_config or CMAConfig())
    controller = family.with_flat(cma.best_params)
    model = evaluator.model_for(cma.best_params)
    return SynthesisResult(controller=controller, model=model,
                           objective_value=cma.best_value, cma=cma,
                           evaluator=evaluator)
