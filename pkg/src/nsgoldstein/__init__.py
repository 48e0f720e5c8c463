"""Finding (delta, epsilon)-stationary points of Lipschitz functions.

Normalized gradient descent with a perturbed min-norm inner loop, and a
cutting-plane direction finder built on center-of-gravity cuts.
"""

from .cutting_plane import cg_descent_run, ip_oracle_lipschitz, ip_oracle_weakly_convex, min_norm_cg
from .errors import CertificateError, NSGoldsteinError
from .geometry import ConvexBody, cut, estimate_centroid, hit_and_run_chord
from .goldstein import (
    GoldsteinParams,
    StationarityCertificate,
    SubgradientEstimate,
    descent_quarter,
    descent_third,
    project_origin_segment,
    verify_certificate,
)
from .harness import ExperimentConfig, certify_stationarity, load_config, parse_config, run_experiment, validate_bounds
from .ingd import MinNormConfig, Outcome, ingd_run, min_norm, perturbation_radius
from .minnorm_poly import wolfe_min_norm
from .oracle import FunctionOracle, TestFunctionSpec, list_functions, make_test_function

__version__ = "0.1.0"

__all__ = [
    "CertificateError", "ConvexBody", "ExperimentConfig", "FunctionOracle", "GoldsteinParams",
    "MinNormConfig", "NSGoldsteinError", "Outcome", "StationarityCertificate", "SubgradientEstimate",
    "TestFunctionSpec", "cg_descent_run", "certify_stationarity", "cut", "descent_quarter", "descent_third",
    "estimate_centroid", "hit_and_run_chord", "ingd_run", "ip_oracle_lipschitz", "ip_oracle_weakly_convex",
    "list_functions", "load_config", "make_test_function", "min_norm", "min_norm_cg", "parse_config",
    "perturbation_radius", "project_origin_segment", "run_experiment", "validate_bounds", "verify_certificate",
    "wolfe_min_norm",
]
