"""Traveling waves for a degenerate precursor/differentiated cell invasion system."""
from .errors import (ConstructionFailure, InvwaveError, ParameterDomainError, PostconditionError,
                     PreconditionError, SolverFailure, StabilityError)
from .grid import Grid
from .model import (DimensionalParams, ModelParams, classify_origin, decay_ordering_gate, equilibria,
                    lambda_gate, min_speed, nondimensionalize, reaction)
from .kpp import KppProblem, KppWave, kpp_rates, lower_problem, solve_kpp, upper_problem
from .sandwich import SandwichPair, build_sandwich, v_from_u, verify_pair
from .wave import IterationConfig, WaveProfile, bilateral_solve, derivative_check, iterate_once, solve_wave
from .analysis import (check_wave_rates, fit_tail_rate, strict_monotonicity_audit, subcritical_diagnostic,
                       translation_align)
from .pdesim import SimConfig, SimState, estimate_speed, front_position, run, step

__version__ = "0.1.0"
