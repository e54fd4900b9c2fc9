"""Numerical verification of anisotropic Hardy and exponential-integrability inequalities."""

from .config import CampaignConfig, default_config, load_config, parse_config
from .errors import (BudgetExhausted, ConfigError, DomainError, FinslerCheckError,
                     IdentityFailure, PolarConvergenceError, PreconditionError)
from .finsler import (DomainSpec, EllipsoidNorm, EuclideanNorm, CustomNorm, PNorm, PolarPair,
                      check_identities, custom_from, equivalence_constants, identity_residuals,
                      make_pair, wulff_perimeter, wulff_volume)
from .functionals import (constants_bundle, estimate_sigma_f, exp_integral, gamma_bar,
                          hardy_difference, kappa)
from .quadrature import (QuadResult, RadialIntegrand, compute_hr, integrate_domain,
                         integrate_radial, integrate_wulff_radial)
from .reports import CheckReport, emit_reports
from .testfunctions import make_modulated, make_radial, v_transform
from .verifier import run_campaign

__version__ = "0.1.0"

__all__ = [
    "BudgetExhausted", "CampaignConfig", "CheckReport", "ConfigError", "CustomNorm",
    "DomainError", "DomainSpec", "EllipsoidNorm", "EuclideanNorm", "FinslerCheckError",
    "IdentityFailure", "PNorm", "PolarConvergenceError", "PolarPair", "PreconditionError",
    "QuadResult", "RadialIntegrand", "check_identities", "compute_hr", "constants_bundle",
    "custom_from", "default_config", "emit_reports", "equivalence_constants",
    "estimate_sigma_f", "exp_integral", "gamma_bar", "hardy_difference", "identity_residuals",
    "integrate_domain", "integrate_radial", "integrate_wulff_radial", "kappa", "load_config",
    "make_modulated", "make_pair", "make_radial", "parse_config", "run_campaign",
    "v_transform", "wulff_perimeter", "wulff_volume",
]
