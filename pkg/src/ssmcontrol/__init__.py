"""Slow-manifold model reduction and periodic feedback controller
synthesis for polynomial control-affine systems."""

__version__ = "0.1.0"

from .cmaes import CMAConfig, CMAResult, optimize_cma_es
from .controller import ControllerParams, controller_eval
from .fields import (ControlAffineSystem, PolynomialVectorField, Trajectory,
                     load_system, pendulum_system)
from .integrators import IntegratorConfig, IntegrationError, integrate
from .invariance import (ForcingResonanceError, HarmonicSetError,
                         ResonanceError, build_reduced_model,
                         invariance_residual, restrict_reduced_dynamics,
                         solve_autonomous, solve_periodic_correction,
                         solve_unit_responses, superpose_responses)
from .kernels import BACKEND
from .objective import (ObjectiveEvaluator, ObjectiveSpec, SinusoidReference,
                        synthesize_controller, tracking_objective,
                        trust_radius_from_reference)
from .simulate import (ErrorMetrics, compare_fom_rom,
                       measure_attraction_rate, orbit_periodicity_defect,
                       pendulum_robustness_sweep, simulate_closed_loop_fom,
                       simulate_rom)
from .spectral import (DegenerateSpectrumError, InvalidSubspaceError,
                       NonresonanceReport, SpectralData, check_nonresonance,
                       eigendecompose, select_slow_subspace,
                       spectral_quotient)
from .taylor_fourier import ReducedModel, TaylorFourierMap
