import math

import numpy as np
import pytest
from scipy.linalg import expm

from ssmcontrol.integrators import (IntegrationError, IntegratorConfig,
                                    integrate)


class TestRK45:
    def test_exponential_decay(self):
        traj = integrate(lambda t, x: -x, np.array([1.0]), (0.0, 1.0),
                         IntegratorConfig(), n_samples=10)
        assert abs(traj.states[-1, 0] - math.exp(-1.0)) < 1e-8

    def test_linear_pendulum_vs_matrix_exponential(self, pendulum35):
        A = pendulum35.A
        x0 = np.array([1.0, 0.0])
        traj = integrate(lambda t, x: A @ x, x0, (0.0, 2.0),
                         IntegratorConfig(rtol=1e-10, atol=1e-12),
                         n_samples=50)
        for t, x in zip(traj.times, traj.states):
            exact = expm(A * t) @ x0
            assert np.linalg.norm(x - exact) < 1e-7

    def test_tolerance_contract_scaling(self):
        # looser tolerance -> larger error, both within contract
        A = np.array([[0.0, 1.0], [-9.81, -35.0]])
        x0 = np.array([1.0, 0.0])
        errs = []
        for rtol in (1e-6, 1e-10):
            traj = integrate(lambda t, x: A @ x, x0, (0.0, 1.0),
                             IntegratorConfig(rtol=rtol, atol=rtol * 1e-2),
                             n_samples=20)
            exact = expm(A * traj.times[-1]) @ x0
            errs.append(np.linalg.norm(traj.states[-1] - exact))
        assert errs[1] < errs[0]
        assert errs[0] < 1e-4

    def test_step_underflow_raises(self):
        def singular(t, x):
            return x / (0.5 - t)

        with pytest.raises(IntegrationError) as err:
            integrate(singular, np.array([1.0]), (0.0, 1.0),
                      IntegratorConfig(), n_samples=10)
        assert err.value.last_time < 0.6

    def test_complex_state(self):
        lam = -1.0 + 2.0j
        traj = integrate(lambda t, x: lam * x,
                         np.array([1.0 + 0.0j]), (0.0, 1.0),
                         IntegratorConfig(rtol=1e-10, atol=1e-12),
                         n_samples=10)
        assert abs(traj.states[-1, 0] - np.exp(lam)) < 1e-8


class TestRK4Fixed:
    def test_measured_order_four(self):
        # global error order fit over dt halvings on the linear pendulum
        # dt range: inside RK4's stability region for lambda = -35 and
        # with errors well above the double-precision floor
        A = np.array([[0.0, 1.0], [-9.81, -35.0]])
        x0 = np.array([1.0, 0.0])
        exact = expm(A * 1.0) @ x0
        dts = [0.05, 0.04, 0.03, 0.02]
        errs = []
        for dt in dts:
            traj = integrate(lambda t, x: A @ x, x0, (0.0, 1.0),
                             IntegratorConfig(method="rk4_fixed", dt=dt),
                             n_samples=10)
            errs.append(np.linalg.norm(traj.states[-1] - exact))
        order = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert abs(order - 4.0) <= 0.2

    def test_halving_reduces_error_16x(self):
        x0 = np.array([1.0])
        exact = math.exp(-1.0)
        e = []
        for dt in (0.1, 0.05):
            traj = integrate(lambda t, x: -x, x0, (0.0, 1.0),
                             IntegratorConfig(method="rk4_fixed", dt=dt),
                             n_samples=10)
            e.append(abs(traj.states[-1, 0] - exact))
        assert 12.0 <= e[0] / e[1] <= 20.0

    def test_nonfinite_state_raises(self):
        with pytest.raises(IntegrationError):
            integrate(lambda t, x: x ** 3, np.array([5.0]), (0.0, 10.0),
                      IntegratorConfig(method="rk4_fixed", dt=0.1),
                      n_samples=10)


class TestInterface:
    def test_uniform_reporting_grid(self):
        traj = integrate(lambda t, x: -x, np.array([1.0]), (0.0, 2.0),
                         n_samples=40)
        assert len(traj.times) == 41
        assert np.allclose(np.diff(traj.times), 0.05)

    def test_invalid_span(self):
        with pytest.raises(ValueError):
            integrate(lambda t, x: -x, np.array([1.0]), (1.0, 0.0))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IntegratorConfig(method="euler")
        with pytest.raises(ValueError):
            IntegratorConfig(dt=-0.1)
        with pytest.raises(ValueError):
            IntegratorConfig(rtol=0.0)
