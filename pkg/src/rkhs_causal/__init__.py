"""Closed-form kernel ridge regression estimators of causal functions."""

from .causal import (
    ConditionalResponse,
    CurveEstimate,
    DoseResponse,
    TreatedResponse,
    estimate_ate,
    estimate_att,
    estimate_cate,
    estimate_ds,
    estimate_incremental,
)
from .data import Dataset
from .distributions import (
    CounterfactualDistribution,
    EmbeddingEstimate,
    HerdedSample,
    embed_counterfactual,
    herd,
    rkhs_distance,
)
from .graphical import FrontDoorResponse, embed_frontdoor, estimate_frontdoor
from .kernels import KernelConfig, KernelFamily, grad_kernel_column, gram, median_heuristic
from .ridge import (
    KernelRidgeRegressor,
    RidgeSolution,
    TheoreticalRate,
    fit_ridge,
    gcv_loss,
    loocv_loss,
    predict,
    theoretical_lambda,
    tune_lambda,
)

__version__ = "0.1.0"

__all__ = [
    "ConditionalResponse",
    "CounterfactualDistribution",
    "CurveEstimate",
    "Dataset",
    "DoseResponse",
    "EmbeddingEstimate",
    "FrontDoorResponse",
    "HerdedSample",
    "KernelConfig",
    "KernelFamily",
    "KernelRidgeRegressor",
    "RidgeSolution",
    "TheoreticalRate",
    "TreatedResponse",
    "embed_counterfactual",
    "embed_frontdoor",
    "estimate_ate",
    "estimate_att",
    "estimate_cate",
    "estimate_ds",
    "estimate_frontdoor",
    "estimate_incremental",
    "fit_ridge",
    "gcv_loss",
    "grad_kernel_column",
    "gram",
    "herd",
    "loocv_loss",
    "median_heuristic",
    "predict",
    "rkhs_distance",
    "theoretical_lambda",
    "tune_lambda",
]
