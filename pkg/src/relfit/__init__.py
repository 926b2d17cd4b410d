"""Relational-model fitting, goodness of fit, and Monte Carlo calibration.

Relational models place one multiplicative effect on each of several
subsets of a discrete sample space: log(delta) = A' theta for a 0-1 full
row rank design A, equivalently D log(delta) = 0 for a kernel basis D.
The package fits such models by maximum likelihood under Poisson and
multinomial sampling, evaluates Pearson, likelihood-ratio, and Bregman
statistics with degrees of freedom K = dim Ker(A), computes the
asymptotic covariance matrices of the scaled estimators, and runs
reproducible Monte Carlo experiments comparing empirical statistic
distributions with the chi-squared reference.
"""

from .asymptotics import (
    AsymptoticSummary,
    multinomial_cov,
    overall_effect_cov,
    pearson_residuals,
    poisson_cov,
)
from .errors import (
    DimensionMismatch,
    DuplicateSubset,
    EmptyColumn,
    EmptySample,
    IndexOutOfRange,
    InvalidArgument,
    NoOverallEffect,
    NonConvergence,
    NonPositiveFitted,
    NonPositiveParameter,
    NotInModel,
    NotNormalized,
    ParseError,
    RankDeficient,
    RelfitError,
    ValidationError,
    ZeroTotal,
)
from .gof import (
    GofReport,
    bregman_stat,
    chisq_cdf,
    chisq_sf,
    gof_test,
    lr_stat,
    pearson_stat,
    statistics_for,
)
from .mle import (
    FitResult,
    ObservedTable,
    SolverOptions,
    as_table,
    fit_augmented,
    fit_multinomial,
    fit_poisson,
    mle_exists,
)
from .model_core import (
    RelationalModel,
    SamplingScheme,
    build_model,
    has_overall_effect,
    load_model,
    model_from_json,
    model_to_json,
    rank_and_kernel,
)
from .rng import Stream, stream_for
from .simulate import (
    ExperimentConfig,
    SimulationReport,
    ks_distance,
    run_experiment,
    sample_multinomial,
    sample_poisson,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticSummary",
    "DimensionMismatch",
    "DuplicateSubset",
    "EmptyColumn",
    "EmptySample",
    "ExperimentConfig",
    "FitResult",
    "GofReport",
    "IndexOutOfRange",
    "InvalidArgument",
    "NoOverallEffect",
    "NonConvergence",
    "NonPositiveFitted",
    "NonPositiveParameter",
    "NotInModel",
    "NotNormalized",
    "ObservedTable",
    "ParseError",
    "RankDeficient",
    "RelationalModel",
    "RelfitError",
    "SamplingScheme",
    "SimulationReport",
    "SolverOptions",
    "Stream",
    "ValidationError",
    "ZeroTotal",
    "as_table",
    "bregman_stat",
    "build_model",
    "chisq_cdf",
    "chisq_sf",
    "fit_augmented",
    "fit_multinomial",
    "fit_poisson",
    "gof_test",
    "has_overall_effect",
    "ks_distance",
    "load_model",
    "lr_stat",
    "mle_exists",
    "model_from_json",
    "model_to_json",
    "multinomial_cov",
    "overall_effect_cov",
    "pearson_residuals",
    "pearson_stat",
    "poisson_cov",
    "rank_and_kernel",
    "run_experiment",
    "sample_multinomial",
    "sample_poisson",
    "statistics_for",
    "stream_for",
    "__version__",
]
