"""Mean-field interacting excitable units: particle simulation, Gaussian-averaged
reduced dynamics, bifurcation location and Hermite diagnostics."""

from .errors import BlowUpError, BracketError, ConfigError, NumericError
from .models import CouplingSpec, ModelSpec, custom_model, make_model, MODEL_NAMES
from .quadrature import (GaussianSpec, QuadratureRule, average_field, average_field_jacobian,
                         default_rule, gaussian_density)
from .trajectory import MeanTrajectory
from .particles import EnsembleState, InitLaw, SimConfig, init_ensemble, run, step
from .reduced import ReducedConfig, boundary_inward_test, integrate
from .assumptions import HypothesisReport, check_hypothesis
from .bifurcation import (BifurcationPoint, FixedPoint, LimitCycle, detect_limit_cycle,
                          fhn_fixed_point_x0, hopf_locus_fhn, pitchfork_locus_fhn,
                          snc_bisection, solve_fixed_points)
from .hermite import (HermiteCoeffSet, ResidualScalingReport, contraction_test, estimate_coeffs,
                      hermite_eval, l2_distance_to_q0, ou_decay_rates, phase_residual_scaling)
from .config import ScenarioConfig, format_config, parse_config

__version__ = "0.1.0"
