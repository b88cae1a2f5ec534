import numpy as np
import pytest

from ssmcontrol.cmaes import CMAConfig, OptimizationError, optimize_cma_es


def sphere(x):
    return float(np.sum(x ** 2))


def rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2
                        + (1.0 - x[:-1]) ** 2))


class TestConvergence:
    def test_sphere_6d_to_1e10_within_3000_evals(self):
        cfg = CMAConfig(sigma0=0.5, max_evals=3000, seed=0, f_tol=0.0,
                        f_target=1e-10, x0=np.full(6, 1.0))
        res = optimize_cma_es(sphere, 6, cfg)
        assert res.best_value <= 1e-10
        assert res.evals <= 3000

    def test_rosenbrock_2d_to_1e6_within_10000_evals(self):
        cfg = CMAConfig(sigma0=0.5, max_evals=10000, seed=0, f_tol=0.0,
                        f_target=1e-6, x0=np.zeros(2))
        res = optimize_cma_es(rosenbrock, 2, cfg)
        assert res.best_value <= 1e-6
        assert res.evals <= 10000

    def test_best_ever_non_increasing(self):
        cfg = CMAConfig(sigma0=0.3, max_evals=2000, seed=3, f_tol=0.0)
        res = optimize_cma_es(sphere, 4, cfg)
        bests = [g.best_ever for g in res.history]
        assert all(b1 >= b2 for b1, b2 in zip(bests, bests[1:]))

    def test_restarts_share_budget_and_keep_best(self):
        cfg = CMAConfig(sigma0=0.5, max_evals=4000, seed=1, f_tol=1e-9,
                        restarts=3, x0=np.full(3, 2.0))
        res = optimize_cma_es(sphere, 3, cfg)
        assert res.evals <= 4000 + 20  # last generation may overshoot
        assert res.best_value <= 1e-8
        bests = [g.best_ever for g in res.history]
        assert all(b1 >= b2 for b1, b2 in zip(bests, bests[1:]))


class TestDeterminism:
    def test_bit_identical_history(self):
        cfg = CMAConfig(sigma0=0.4, max_evals=1500, seed=42, f_tol=0.0)
        r1 = optimize_cma_es(rosenbrock, 3, cfg)
        r2 = optimize_cma_es(rosenbrock, 3, cfg)
        assert r1.best_value == r2.best_value
        assert np.array_equal(r1.best_params, r2.best_params)
        assert len(r1.history) == len(r2.history)
        for g1, g2 in zip(r1.history, r2.history):
            assert (g1.best, g1.median, g1.best_ever, g1.sigma) \
                == (g2.best, g2.median, g2.best_ever, g2.sigma)

    def test_seed_changes_trajectory(self):
        cfg1 = CMAConfig(sigma0=0.4, max_evals=500, seed=0, f_tol=0.0)
        cfg2 = CMAConfig(sigma0=0.4, max_evals=500, seed=1, f_tol=0.0)
        r1 = optimize_cma_es(sphere, 3, cfg1)
        r2 = optimize_cma_es(sphere, 3, cfg2)
        assert r1.history[0].best != r2.history[0].best


class TestRobustness:
    def test_isolated_non_finite_values_survive(self):
        def spiky(x):
            if abs(x[0] - 0.8) < 0.02:
                return float("nan")
            return sphere(x)

        cfg = CMAConfig(sigma0=0.5, max_evals=3000, seed=7, f_tol=0.0,
                        f_target=1e-8, x0=np.full(2, 1.5))
        res = optimize_cma_es(spiky, 2, cfg)
        assert res.best_value <= 1e-8

    def test_all_nan_generation_aborts(self):
        def bad(x):
            return float("nan")

        cfg = CMAConfig(sigma0=0.5, max_evals=500, seed=0)
        with pytest.raises(OptimizationError):
            optimize_cma_es(bad, 3, cfg)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            optimize_cma_es(sphere, 0, CMAConfig())
        with pytest.raises(ValueError):
            optimize_cma_es(sphere, 2, CMAConfig(sigma0=-1.0))

    def test_f_tol_termination(self):
        cfg = CMAConfig(sigma0=0.5, max_evals=50000, seed=0, f_tol=1e-8)
        res = optimize_cma_es(sphere, 2, cfg)
        assert res.stop_reason == "f_tol"
        assert res.evals < 50000
