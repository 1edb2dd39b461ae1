"""Minimal-scale calibration of symmetric log-concave additive noise."""

__version__ = "0.1.0"

from logcalib.calibrate import (CalibrationResult, PrivacyBudget, SensitivitySpec,
                                gaussian_scale, oracle_delta, privacy_profile,
                                scale_for_budget, threshold_t)
from logcalib.errors import ConvergenceError, DomainError
from logcalib.noise import (NoiseFamily, gaussian_family, laplace_family, logistic_family,
                            parse_family, subbotin_family, truncated_laplace_family)

__all__ = [
    "CalibrationResult", "ConvergenceError", "DomainError", "NoiseFamily", "PrivacyBudget",
    "SensitivitySpec", "gaussian_family", "gaussian_scale", "laplace_family",
    "logistic_family", "oracle_delta", "parse_family", "privacy_profile",
    "scale_for_budget", "subbotin_family", "threshold_t", "truncated_laplace_family",
]
