"""Nonparametric density estimation under multiplicative measurement errors.

Estimates the density of a positive random variable X from samples of
Y = X * U (U an independent noise factor with known density) by inverting
the empirical Mellin transform with a spectral cut-off, selected by a fully
data-driven penalized contrast.
"""

from .mellin import (ConjugateSymmetryError, FrequencyGrid, MellinValue,
                     Sample, analytic_mellin, bias_tail, empirical_mellin,
                     invert_cutoff, parseval_norm, sobolev_seminorm)
from .models import (AssumptionViolation, ErrorDensity, TargetDensity,
                     cg_estimate, default_chi, make_error, make_target,
                     noise_functional, random_histogram_density,
                     resolve_error, sample_error, sample_noisy, sample_target)
from .estimator import (CutoffEstimate, EstimatorConfig, estimate_direct,
                        estimate_noisy, variance_bound, weighted_ise)
from .selection import (CalibrationConfig, PenaltyConfig, SelectionResult,
                        adaptive_estimate, calibrate_chi, select_k)
from .experiments import (MCConfig, RateStudy, RiskReport, adaptive_vs_oracle,
                          monte_carlo, oracle_risk, rate_study, rep_rng)

__version__ = "0.1.0"

__all__ = [
    "FrequencyGrid", "MellinValue", "Sample", "ConjugateSymmetryError",
    "empirical_mellin", "analytic_mellin", "invert_cutoff", "parseval_norm",
    "sobolev_seminorm", "bias_tail",
    "TargetDensity", "ErrorDensity", "AssumptionViolation", "make_target",
    "make_error", "resolve_error", "noise_functional", "cg_estimate",
    "sample_target", "sample_error", "sample_noisy",
    "random_histogram_density", "default_chi",
    "EstimatorConfig", "CutoffEstimate", "estimate_direct", "estimate_noisy",
    "weighted_ise", "variance_bound",
    "PenaltyConfig", "SelectionResult", "CalibrationConfig", "select_k",
    "adaptive_estimate", "calibrate_chi",
    "MCConfig", "RiskReport", "RateStudy", "monte_carlo", "oracle_risk",
    "adaptive_vs_oracle", "rate_study", "rep_rng",
]
