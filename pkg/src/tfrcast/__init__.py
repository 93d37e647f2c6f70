"""Joint probabilistic TFR projections for arbitrary sets of countries.

The package layers a covariate-driven between-country correlation model on
top of a two-phase country-level TFR evolution model: standardized forecast
errors feed a pairwise pseudo-likelihood fit of the correlation parameters,
model matrices are repaired to positive semidefiniteness, and a seeded
Monte Carlo engine projects joint trajectories whose weighted aggregates
yield regional prediction intervals, coverage scores, and variance factors.
"""
from .analytics import (
    CoverageResult,
    RegionVarianceRow,
    coverage,
    dependence_factor,
    df_if_ratio,
    independence_factor,
    variance_report,
)
from .correlation import CorrelationMatrix, build_correlation_matrix, pair_correlation
from .domain import (
    ConstantSigma,
    CorrelationParams,
    CountryId,
    CovariateStore,
    DEFAULT_CORRELATION_PARAMS,
    Diagnostic,
    PairCovariates,
    Phase,
    PiecewiseSigma,
    PopulationWeights,
    PosteriorDraws,
    SIGMA_KNOTS,
    TFRPanel,
    TransitionParams,
    validate_panel,
)
from .empirical import arcsine_posterior_mean, pairwise_error_overlap
from .errors import DataValidationError, ForecastError, InsufficientDataError, UnsupportedPhaseError
from .estimation import (
    OptimizerDiagnostics,
    PseudoLikelihoodFit,
    bivariate_normal_loglik,
    default_kappa_grid,
    kappa_grid_search,
    maximize_given_kappa,
    pseudo_loglik,
)
from .estimators import CorrelationModelEstimator, PsdRepairer, TFRProjector
from .phase_model import (
    DEFAULT_CONSTANTS,
    PostTransitionConstants,
    conditional_mean,
    conditional_sd,
    decline,
    mean_standardized_errors,
    standardized_error,
)
from .psd import (
    RepairDiagnostics,
    eigen_sym,
    nearest_psd,
    repair,
    repair_matrix,
    repair_with_diagnostics,
    rescale_to_correlation,
    symmetric_sqrt,
)
from .simulate import (
    TrajectoryEnsemble,
    prediction_interval,
    project,
    regional_aggregate,
    sample_joint_errors,
)

__version__ = "0.1.0"

__all__ = [
    "ConstantSigma",
    "CorrelationMatrix",
    "CorrelationModelEstimator",
    "CorrelationParams",
    "CountryId",
    "CovariateStore",
    "CoverageResult",
    "DEFAULT_CONSTANTS",
    "DEFAULT_CORRELATION_PARAMS",
    "DataValidationError",
    "Diagnostic",
    "ForecastError",
    "InsufficientDataError",
    "OptimizerDiagnostics",
    "PairCovariates",
    "Phase",
    "PiecewiseSigma",
    "PopulationWeights",
    "PosteriorDraws",
    "PostTransitionConstants",
    "PsdRepairer",
    "PseudoLikelihoodFit",
    "RegionVarianceRow",
    "RepairDiagnostics",
    "SIGMA_KNOTS",
    "TFRPanel",
    "TFRProjector",
    "TrajectoryEnsemble",
    "TransitionParams",
    "UnsupportedPhaseError",
    "arcsine_posterior_mean",
    "bivariate_normal_loglik",
    "build_correlation_matrix",
    "conditional_mean",
    "conditional_sd",
    "coverage",
    "decline",
    "default_kappa_grid",
    "dependence_factor",
    "df_if_ratio",
    "eigen_sym",
    "independence_factor",
    "kappa_grid_search",
    "maximize_given_kappa",
    "mean_standardized_errors",
    "nearest_psd",
    "pair_correlation",
    "pairwise_error_overlap",
    "prediction_interval",
    "project",
    "pseudo_loglik",
    "regional_aggregate",
    "repair",
    "repair_matrix",
    "repair_with_diagnostics",
    "rescale_to_correlation",
    "sample_joint_errors",
    "standardized_error",
    "symmetric_sqrt",
    "validate_panel",
    "variance_report",
]
