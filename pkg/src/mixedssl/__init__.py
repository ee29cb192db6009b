"""Sparse multivariate regression with mixed binary/continuous outcomes.

MAP estimation under spike-and-slab LASSO priors on the latent regression
coefficients and latent residual precision, computed by a Monte Carlo
expectation-conditional-maximization loop over a partially observed Gaussian
model.
"""

from ._backend import active_backend
from .driver import (
    Convergence,
    FitConfig,
    PathResult,
    default_hyperparameters,
    fit_path,
    fit_single,
    initial_state,
)
from .errors import (
    ConditioningError,
    DataValidationError,
    DegenerateCovariateError,
    DivergenceError,
    InputShapeError,
    MixedSslError,
    NotPositiveDefiniteError,
    ParameterError,
)
from .estep import PenaltyState, SurrogateStats, residual_stats, slab_probability, update_penalties
from .metrics import (
    SupportReport,
    predictive_scores,
    regression_function_error,
    sure_screen,
    support_metrics,
)
from .sampler import (
    ConditionalGaussian,
    OrthantConstraint,
    conditional_of_binary_block,
    ellipse_arc_intersection,
    liness_step,
    sample_latents,
)
from .simulate import (
    OmegaStructure,
    SignalRegime,
    gen_coefficients,
    gen_covariates,
    gen_omega,
    simulate_dataset,
    simulate_outcomes,
)
from .types import (
    Dataset,
    Hyperparameters,
    LatentDraws,
    ModelState,
    OutcomeKind,
    apply_link,
    standardize,
    validate_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "Convergence", "FitConfig", "PathResult", "default_hyperparameters",
    "fit_path", "fit_single", "initial_state", "active_backend",
    "PenaltyState", "SurrogateStats", "residual_stats", "slab_probability",
    "update_penalties", "SupportReport", "predictive_scores",
    "regression_function_error", "sure_screen", "support_metrics",
    "ConditionalGaussian", "OrthantConstraint", "conditional_of_binary_block",
    "ellipse_arc_intersection", "liness_step", "sample_latents",
    "OmegaStructure", "SignalRegime", "gen_coefficients", "gen_covariates",
    "gen_omega", "simulate_dataset", "simulate_outcomes",
    "Dataset", "Hyperparameters", "LatentDraws", "ModelState", "OutcomeKind",
    "apply_link", "standardize", "validate_dataset",
    "MixedSslError", "ParameterError", "InputShapeError",
    "DegenerateCovariateError", "DataValidationError",
    "NotPositiveDefiniteError", "ConditioningError", "DivergenceError",
]
