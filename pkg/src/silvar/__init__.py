"""Sparse plus low-rank multi-task regression with a learned monotone
1-Lipschitz link function, for network structure recovery under latent
variables."""

from .baselines import FixedLink, fit_glm, fit_sparse_sim, softplus_antiderivative
from .errors import InvalidInputError, NumericalError, SilvarError
from .evaluation import (
    GridSearchResult,
    GridSpec,
    SplitSpec,
    SyntheticSpec,
    embed,
    grid_search,
    rmse,
    support_metrics,
    synthesize,
)
from .link import LinkFunction, lmr
from .prox import (
    RegularizerConfig,
    numerical_rank,
    penalty_value,
    prox_group,
    prox_l1,
    prox_nuclear,
)
from .solver import (
    Dataset,
    FitReport,
    SilvarModel,
    SolverConfig,
    Standardization,
    fit,
    gradient,
    linear_response,
    predict,
    surrogate_objective,
)
from .timeseries import GraphExport, TimeSeries, build_ar_dataset, to_graph

__all__ = [
    "Dataset",
    "FitReport",
    "FixedLink",
    "GraphExport",
    "GridSearchResult",
    "GridSpec",
    "InvalidInputError",
    "LinkFunction",
    "NumericalError",
    "RegularizerConfig",
    "SilvarError",
    "SilvarModel",
    "SolverConfig",
    "SplitSpec",
    "Standardization",
    "SyntheticSpec",
    "TimeSeries",
    "build_ar_dataset",
    "embed",
    "fit",
    "fit_glm",
    "fit_sparse_sim",
    "gradient",
    "grid_search",
    "linear_response",
    "lmr",
    "numerical_rank",
    "penalty_value",
    "predict",
    "prox_group",
    "prox_l1",
    "prox_nuclear",
    "rmse",
    "softplus_antiderivative",
    "support_metrics",
    "surrogate_objective",
    "synthesize",
    "to_graph",
]
