"""Covariance matrix adaptation evolution strategy.

Textbook (mu/mu_w, lambda)-CMA-ES with cumulative step-size adaptation and
rank-one plus rank-mu covariance updates (Hansen's tutorial formulation).
Runs are deterministic for a fixed seed; per-generation statistics are
recorded so optimization traces can be written out and replayed.
"""

import math
from dataclasses import dataclass, field

import numpy as np


class OptimizationError(RuntimeError):
    """The optimizer cannot proceed (e.g. no finite objective values)."""


@dataclass(frozen=True)
class CMAConfig:
    sigma0: float = 0.5
    population: int = None         # default 4 + floor(3 ln n)
    max_evals: int = 20000
    seed: int = 0
    f_tol: float = 1e-8            # stop when recent gen-bests stagnate
    f_target: float = None         # stop when best <= target
    x0: np.ndarray = None
    restarts: int = 0              # extra runs with doubled population


@dataclass
class GenerationRecord:
    generation: int
    evals: int
    best: float
    median: float
    best_ever: float
    sigma: float


@dataclass
class CMAResult:
    best_params: np.ndarray
    best_value: float
    evals: int
    stop_reason: str
    history: list = field(default_factory=list)


def optimize_cma_es(objective, n_params, config=None):
    """Minimize a black-box objective over R^n_params.

    Non-finite objective values are treated as a large penalty so a run
    can survive isolated bad candidates; a generation with no finite value
    at all aborts with :class:`OptimizationError`.

    With ``restarts > 0`` the strategy is rerun from scratch after each
    inner stop (stagnation, condition, target), up to ``restarts`` extra
    times or until the shared ``max_evals`` budget is spent, and the best
    candidate over all runs is returned. Everything is driven by one
    seeded generator, so results are reproducible.
    """
    cfg = config or CMAConfig()
    n = int(n_params)
    if n < 1:
        raise ValueError("n_params must be >= 1")
    if cfg.sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    rng = np.random.default_rng(cfg.seed)

    lam0 = cfg.population or (4 + int(3 * math.log(n)))
    lam0 = max(lam0, 4)

    best_params = None
    best_value = math.inf
    history = []
    evals = 0
    gen = 0
    stop_reason = "max_evals"
    for run in range(cfg.restarts + 1):
        if evals >= cfg.max_evals:
            break
        out = _single_run(objective, n, cfg, rng, lam0,
                          cfg.max_evals - evals, gen, evals,
                          best_value, history)
        evals = out["evals"]
        gen = out["gen"]
        stop_reason = out["stop_reason"]
        if out["best_value"] < best_value:
            best_value = out["best_value"]
            best_params = out["best_params"]
        if stop_reason == "f_target":
            break
    if best_params is None:
        best_params = (np.zeros(n) if cfg.x0 is None
                       else np.asarray(cfg.x0, dtype=float).copy())
    return CMAResult(best_params=best_params, best_value=best_value,
                     evals=evals, stop_reason=stop_reason, history=history)


def _single_run(objective, n, cfg, rng, lam, budget, gen, evals_so_far,
                best_ever_in, history):
    mu = lam // 2
    w = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w = w / w.sum()
    mu_eff = 1.0 / float(np.sum(w ** 2))

    c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0)
    d_sigma = (1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0)
               + c_sigma)
    c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n)
    c_1 = 2.0 / ((n + 1.3) ** 2 + mu_eff)
    c_mu = min(1.0 - c_1,
               2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) ** 2 + mu_eff))
    chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n ** 2))

    mean = (np.zeros(n) if cfg.x0 is None
            else np.asarray(cfg.x0, dtype=float).copy())
    sigma = float(cfg.sigma0)
    C = np.eye(n)
    p_sigma = np.zeros(n)
    p_c = np.zeros(n)
    B = np.eye(n)
    D = np.ones(n)

    best_params = mean.copy()
    best_value = math.inf
    evals = evals_so_far
    max_evals = evals_so_far + budget
    stall_window = 10 + int(math.ceil(30.0 * n / lam))
    recent_bests = []
    stop_reason = "max_evals"
    penalty = 1e300

    while evals < max_evals:
        gen += 1
        Z = rng.standard_normal((lam, n))
        Y = Z @ (B * D).T           # y ~ N(0, C)
        X = mean + sigma * Y
        values = np.empty(lam)
        for i in range(lam):
            v = objective(X[i])
            values[i] = v if np.isfinite(v) else penalty
        evals += lam
        if not np.any(values < penalty):
            raise OptimizationError(
                f"generation {gen}: no finite objective values "
                f"(all {lam} candidates penalized)")
        order = np.argsort(values, kind="stable")
        if values[order[0]] < best_value:
            best_value = float(values[order[0]])
            best_params = X[order[0]].copy()

        y_w = w @ Y[order[:mu]]
        mean = mean + sigma * y_w

        # step-size path uses C^(-1/2) y_w = B D^-1 B^T y_w
        c_inv_sqrt_y = B @ ((B.T @ y_w) / D)
        p_sigma = ((1.0 - c_sigma) * p_sigma
                   + math.sqrt(c_sigma * (2.0 - c_sigma) * mu_eff)
                   * c_inv_sqrt_y)
        run_evals = evals - evals_so_far
        h_sig = (np.linalg.norm(p_sigma)
                 / math.sqrt(1.0 - (1.0 - c_sigma) ** (2.0 * run_evals / lam))
                 / chi_n) < (1.4 + 2.0 / (n + 1.0))
        p_c = ((1.0 - c_c) * p_c
               + h_sig * math.sqrt(c_c * (2.0 - c_c) * mu_eff) * y_w)

        rank_mu = (Y[order[:mu]].T * w) @ Y[order[:mu]]
        C = ((1.0 - c_1 - c_mu) * C
             + c_1 * (np.outer(p_c, p_c)
                      + (0.0 if h_sig else c_c * (2.0 - c_c)) * C)
             + c_mu * rank_mu)
        sigma = sigma * math.exp((c_sigma / d_sigma)
                                 * (np.linalg.norm(p_sigma) / chi_n - 1.0))

        C = np.triu(C) + np.triu(C, 1).T
        eigvals, B = np.linalg.eigh(C)
        if np.any(eigvals <= 0) or not np.all(np.isfinite(eigvals)):
            stop_reason = "covariance_degenerate"
            break
        D = np.sqrt(eigvals)

        gen_best = float(values[order[0]])
        history.append(GenerationRecord(
            generation=gen, evals=evals, best=gen_best,
            median=float(np.median(values)),
            best_ever=min(best_value, best_ever_in),
            sigma=sigma))
        recent_bests.append(gen_best)
        if len(recent_bests) > stall_window:
            recent_bests.pop(0)

        if cfg.f_target is not None and best_value <= cfg.f_target:
            stop_reason = "f_target"
            break
        if (cfg.f_tol > 0 and len(recent_bests) == stall_window
                and max(recent_bests) - min(recent_bests) < cfg.f_tol):
            stop_reason = "f_tol"
            break
        if D.max() / D.min() > 1e7:
            stop_reason = "condition"
            break

    return {"best_params": best_params, "best_value": best_value,
            "evals": evals, "gen": gen, "stop_reason": stop_reason}
