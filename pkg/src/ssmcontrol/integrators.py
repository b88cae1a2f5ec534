"""Fixed-step RK4 and adaptive Dormand-Prince 5(4) integration.

Both methods report states on a uniform grid. The adaptive integrator
clips steps to the report times, so no interpolant is needed and the
reported samples satisfy the local tolerance directly. Packed-system hot
loops live in the kernel backends; this module is the generic
callback-based path.
"""

import math
from dataclasses import dataclass

import numpy as np

from .fields import Trajectory


class IntegrationError(RuntimeError):
    """Integration failed; ``last_time`` holds the last valid time."""

    def __init__(self, message, last_time):
        self.last_time = last_time
        super().__init__(f"{message} (last valid time t={last_time:.6g})")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45_adaptive"   # or "rk4_fixed"
    dt: float = None                # rk4_fixed step size target
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = math.inf

    def __post_init__(self):
        if self.method not in ("rk45_adaptive", "rk4_fixed"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176,
              -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784,
                   11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])
_DP_E = _DP_B5 - _DP_B4


def _rk4_step(rhs, t, x, h):
    k1 = rhs(t, x)
    k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = rhs(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate_rk4(rhs, x0, grid, dt):
    states = np.empty((len(grid),) + x0.shape, dtype=x0.dtype)
    states[0] = x0
    x = x0
    for i in range(len(grid) - 1):
        t0, t1 = grid[i], grid[i + 1]
        span = t1 - t0
        nsub = max(1, int(math.ceil(span / dt))) if dt else 1
        h = span / nsub
        t = t0
        for _ in range(nsub):
            x = _rk4_step(rhs, t, x, h)
            t += h
        if not np.all(np.isfinite(np.atleast_1d(np.abs(x)))):
            raise IntegrationError("non-finite state in rk4_fixed", grid[i])
        states[i + 1] = x
    return states


def _integrate_dp45(rhs, x0, grid, cfg):
    states = np.empty((len(grid),) + x0.shape, dtype=x0.dtype)
    states[0] = x0
    x = x0
    t = grid[0]
    t_end = grid[-1]
    h = min(cfg.max_step, (t_end - t) / 100.0)
    k = [None] * 7
    k[0] = rhs(t, x)
    next_report = 1
    hmin_floor = 1e-14
    while next_report < len(grid):
        t_target = grid[next_report]
        h = min(h, cfg.max_step, t_target - t)
        if h < hmin_floor * max(1.0, abs(t)):
            raise IntegrationError("step size underflow in rk45_adaptive", t)
        for s in range(1, 7):
            xs = x + h * sum(a * k[j] for j, a in enumerate(_DP_A[s]))
            k[s] = rhs(t + _DP_C[s] * h, xs)
        x5 = x + h * sum(b * k[j] for j, b in enumerate(_DP_B5) if b)
        err = h * sum(e * k[j] for j, e in enumerate(_DP_E) if e)
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(x), np.abs(x5))
        enorm = float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))
        if not np.isfinite(enorm):
            raise IntegrationError("non-finite state in rk45_adaptive", t)
        if enorm <= 1.0:
            t = t + h
            x = x5
            k[0] = k[6]  # FSAL
            if abs(t - t_target) < 1e-12 * max(1.0, abs(t_target)):
                states[next_report] = x
                next_report += 1
        factor = 0.9 * (enorm ** -0.2) if enorm > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))
    return states


def integrate(rhs, x0, t_span, cfg=None, n_samples=1000, kind="full_state"):
    """Integrate dx/dt = rhs(t, x) and report on a uniform grid.

    Returns a :class:`Trajectory` with ``n_samples + 1`` evenly spaced
    samples across ``t_span``. Complex states are supported (used by the
    reduced dynamics when the master spectrum has complex pairs).
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    x0 = np.atleast_1d(np.asarray(x0))
    if not np.issubdtype(x0.dtype, np.complexfloating):
        x0 = x0.astype(float)
    grid = np.linspace(t0, t1, n_samples + 1)
    if cfg.method == "rk4_fixed":
        states = _integrate_rk4(rhs, x0, grid, cfg.dt)
    else:
        states = _integrate_dp45(rhs, x0, grid, cfg)
    return Trajectory(times=grid, states=states, kind=kind)
