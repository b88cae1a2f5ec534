import math

import numpy as np
import pytest

from ssmcontrol.cmaes import CMAConfig
from ssmcontrol.controller import ControllerParams
from ssmcontrol.fields import pendulum_system
from ssmcontrol.invariance import solve_autonomous
from ssmcontrol.objective import (ObjectiveSpec, SinusoidReference,
                                  synthesize_controller)
from ssmcontrol.spectral import eigendecompose, select_slow_subspace

OMEGA = math.pi
PERIOD = 2.0 * math.pi / OMEGA


@pytest.fixture(scope="session")
def pendulum35():
    return pendulum_system(b=35.0)


@pytest.fixture(scope="session")
def pendulum7():
    return pendulum_system(b=7.0)


@pytest.fixture(scope="session")
def spec35(pendulum35):
    return select_slow_subspace(eigendecompose(pendulum35.A), 1)


@pytest.fixture(scope="session")
def spec7(pendulum7):
    return select_slow_subspace(eigendecompose(pendulum7.A), 1)


@pytest.fixture(scope="session")
def autonomous35(pendulum35, spec35):
    return solve_autonomous(pendulum35, spec35, order=3)


@pytest.fixture(scope="session")
def reference():
    return SinusoidReference(offset=math.radians(30.0),
                             amplitude=math.radians(60.0), omega=OMEGA)


@pytest.fixture(scope="session")
def objective_spec(reference):
    return ObjectiveSpec(reference=reference, omega=OMEGA)


@pytest.fixture(scope="session")
def controller_family():
    return ControllerParams.zeros(1, 1, 1, (-1, 0, 1), OMEGA)


@pytest.fixture(scope="session")
def benchmark_synthesis(pendulum35, spec35, controller_family,
                        objective_spec):
    """The tracking benchmark synthesis, shared across the suite.

    Matches the pendulum-fig3 preset's optimizer settings.
    """
    return synthesize_controller(
        pendulum35, spec35, controller_family, objective_spec,
        taylor_order=3, correction_order=1, harmonics=(-1, 0, 1),
        cma_config=CMAConfig(sigma0=0.5, max_evals=20000, seed=0,
                             f_tol=1e-10, restarts=4))
