"""Adaptive spectral cut-off estimation for instrumental-variable regression.

The package couples an exact simulator for a circular IV model with
polynomially decaying operator eigenvalues, the adaptive estimation
pipeline (estimated eigenvalues, data-driven resolution bound,
penalized level selection), and a reproducible Monte Carlo harness for
oracle-ratio, rate, and bracketing studies.
"""

__version__ = "0.1.0"

from .basis import (
    SUP_NORM_BOUND,
    CoefficientVector,
    FunctionFamilySpec,
    basis_matrix,
    eval_basis,
    frequency,
    make_test_function,
    parseval_sq_distance,
    sobolev_seminorm_sq,
    synthesize,
)
from .dgp import (
    ORACLE_DRAWS,
    ORACLE_SEED,
    AssumptionReport,
    DgpSpec,
    IvSample,
    apply_operator,
    eigenvalue_profile,
    generate_sample,
    sample_noise,
    sigma_sq_profile,
    sigma_sq_true,
    true_eigenvalue,
    validate_assumptions,
)
from .estimator import (
    DegenerateSampleError,
    EstimateReport,
    EstimatorConfig,
    adaptive_estimate,
    deterministic_resolution_bounds,
    estimate_eigenvalues,
    estimate_r_coeffs,
    estimate_resolution,
    estimate_sigma_sq,
    flat_penalty_criterion,
    naive_estimator,
    penalized_criterion,
    select_level,
    select_resolution,
    thresholded_estimator,
)
from .risk import (
    ORACLE_SCAN_BUFFER,
    CoverageResult,
    DegenerateFitError,
    OracleRatioResult,
    OracleSummary,
    RateFit,
    ReplicationBatch,
    RiskCurve,
    coverage_study,
    loss,
    mc_risk,
    min_penalized_risk,
    oracle_level,
    oracle_ratio_study,
    oracle_summary,
    rate_fit,
    replication_losses,
    restricted_oracle_level,
    risk_naive,
    risk_penalized,
    truncation_remainder,
)

__all__ = [
    "__version__",
    "SUP_NORM_BOUND",
    "ORACLE_DRAWS",
    "ORACLE_SEED",
    "ORACLE_SCAN_BUFFER",
    "AssumptionReport",
    "CoefficientVector",
    "CoverageResult",
    "DegenerateFitError",
    "DegenerateSampleError",
    "DgpSpec",
    "EstimateReport",
    "EstimatorConfig",
    "FunctionFamilySpec",
    "IvSample",
    "OracleRatioResult",
    "OracleSummary",
    "RateFit",
    "ReplicationBatch",
    "RiskCurve",
    "adaptive_estimate",
    "apply_operator",
    "basis_matrix",
    "coverage_study",
    "deterministic_resolution_bounds",
    "eigenvalue_profile",
    "estimate_eigenvalues",
    "estimate_r_coeffs",
    "estimate_resolution",
    "estimate_sigma_sq",
    "eval_basis",
    "flat_penalty_criterion",
    "frequency",
    "generate_sample",
    "loss",
    "make_test_function",
    "mc_risk",
    "min_penalized_risk",
    "naive_estimator",
    "oracle_level",
    "oracle_ratio_study",
    "oracle_summary",
    "parseval_sq_distance",
    "penalized_criterion",
    "rate_fit",
    "replication_losses",
    "restricted_oracle_level",
    "risk_naive",
    "risk_penalized",
    "sample_noise",
    "select_level",
    "select_resolution",
    "sigma_sq_profile",
    "sigma_sq_true",
    "sobolev_seminorm_sq",
    "synthesize",
    "thresholded_estimator",
    "true_eigenvalue",
    "truncation_remainder",
    "validate_assumptions",
]
