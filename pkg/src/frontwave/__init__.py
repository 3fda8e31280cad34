"""Traveling fronts of degenerate diffusion-convection-reaction equations.

The package reduces the profile equation to a singular first-order problem
for the flux ``z(phi) = D(phi) phi'``, shoots it from either equilibrium,
locates the critical speed and the boundary-value thresholds by bisection,
and rebuilds and classifies the profiles.
"""

__version__ = "0.1.0"

from .errors import (BelowAdmissibleRange, BracketError, ConvergenceError, FrontwaveError,
                     ModelError, RefusalError)
from .model import AssumptionReport, Model, ModelSpec, build_model, load_model, validate_assumptions
from .presets import get_preset, preset_names, presets
from .singular_ode import (BACKEND, DEFAULT_CONFIG, IntegratorConfig, ShootingResult,
                           check_upper_lower, integrate_backward_from_one,
                           integrate_forward_from_zero, r_plus, s_pm)
from .thresholds import (BetaResult, CriticalSpeedResult, SpeedBounds, analytic_bounds, beta,
                         beta_hat, critical_speed)
from .profile import FrontProfile, build_profile, classify_at_zero, slope_at_one, xi_of_phi

__all__ = [
    "__version__", "BACKEND",
    "FrontwaveError", "ModelError", "RefusalError", "BelowAdmissibleRange",
    "ConvergenceError", "BracketError",
    "ModelSpec", "Model", "AssumptionReport", "build_model", "load_model",
    "validate_assumptions", "presets", "preset_names", "get_preset",
    "IntegratorConfig", "DEFAULT_CONFIG", "ShootingResult", "r_plus", "s_pm",
    "integrate_backward_from_one", "integrate_forward_from_zero", "check_upper_lower",
    "SpeedBounds", "CriticalSpeedResult", "BetaResult", "analytic_bounds",
    "critical_speed", "beta", "beta_hat",
    "FrontProfile", "xi_of_phi", "build_profile", "slope_at_one", "classify_at_zero",
]
