"""Counterfactual distribution embeddings and herded samples from them.

An embedding is the function ``y -> K_{yY} c`` where ``c`` solves the outcome
system with penalty ``lam3`` against the same integrated column the mean
estimators use. The solve never touches the observed outcomes; they enter
only through ``K_{yY}`` at evaluation time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .causal import (
    Design,
    Heuristic,
    ate_columns,
    att_columns,
    cate_columns,
    frontdoor_columns,
    resolve_kernel,
)
from .data import Dataset
from .exceptions import ConfigurationError
from .kernels import KernelConfig, as_points, gram
from .ridge import Penalty, fit_ridge, select_penalty

DEFAULT_GRID_SIZE = 512

DISTRIBUTION_ESTIMANDS = ("ate", "ds", "att", "cate", "frontdoor")


@dataclass(frozen=True, eq=False)
class EmbeddingEstimate:
    coefficients: np.ndarray
    outcome_points: np.ndarray
    outcome_kernel: KernelConfig
    estimand: str = ""
    eval_point: dict = field(default_factory=dict)

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float).ravel()
        pts = as_points(self.outcome_points)
        if coef.shape[0] != pts.shape[0]:
            raise ConfigurationError("one coefficient per outcome point is required")
        if not np.all(np.isfinite(coef)):
            raise ConfigurationError("embedding coefficients must be finite")
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "outcome_points", pts)

    def __call__(self, y) -> np.ndarray:
        return gram(as_points(y), self.outcome_points, self.outcome_kernel) @ self.coefficients

    def self_inner(self) -> float:
        K = gram(self.outcome_points, self.outcome_points, self.outcome_kernel)
        return float(self.coefficients @ K @ self.coefficients)


@dataclass(frozen=True, eq=False)
class HerdedSample:
    points: np.ndarray
    candidate_grid: np.ndarray
    indices: np.ndarray


def default_candidate_grid(outcomes, size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Equally spaced grid on [min - range/2, max + range/2]; a zero range is
    widened to 1."""
    y = np.asarray(outcomes, dtype=float).ravel()
    lo, hi = float(y.min()), float(y.max())
    span = hi - lo if hi > lo else 1.0
    return np.linspace(lo - 0.5 * span, hi + 0.5 * span, size)


def herd(embedding: EmbeddingEstimate, m: int, candidate_grid=None) -> HerdedSample:
    """Greedy herding over a finite candidate grid.

    Step j maximizes ``embedding(y) - sum_{l<j} k(Y_l, y) / (j + 1)``; ties go
    to the lowest grid index.
    """
    if m < 1:
        raise ConfigurationError("number of herded samples must be at least 1")
    if candidate_grid is None:
        candidate_grid = default_candidate_grid(embedding.outcome_points[:, 0])
    grid = as_points(candidate_grid)
    if grid.shape[0] == 0:
        raise ConfigurationError("candidate grid is empty")
    target = embedding(grid)
    K_grid = gram(grid, grid, embedding.outcome_kernel)
    running = np.zeros(grid.shape[0])
    chosen = np.empty(m, dtype=int)
    for j in range(1, m + 1):
        idx = int(np.argmax(target - running / (j + 1)))
        chosen[j - 1] = idx
        running += K_grid[:, idx]
    points = grid[chosen]
    return HerdedSample(points=points[:, 0] if grid.shape[1] == 1 else points,
                        candidate_grid=grid[:, 0] if grid.shape[1] == 1 else grid,
                        indices=chosen)


def rkhs_distance(embedding: EmbeddingEstimate, samples) -> float:
    """Outcome-RKHS norm of ``embedding - mean_j phi(samples_j)``."""
    s = as_points(samples)
    k = embedding.outcome_kernel
    cross = gram(s, embedding.outcome_points, k) @ embedding.coefficients
    sq = embedding.self_inner() - 2 * cross.mean() + gram(s, s, k).mean()
    return float(np.sqrt(max(sq, 0.0)))


class CounterfactualDistribution(BaseEstimator):
    """Embeddings of counterfactual outcome distributions.

    Parameters
    ----------
    estimand : {'ate', 'ds', 'att', 'cate', 'frontdoor'}
    penalty : float, {'loocv', 'gcv'} or TheoreticalRate
        Penalty ``lam3`` of the regression of phi(Y) on the treatment and
        covariates; cross validation sums the losses over the columns of K_YY.
    embedding_penalty : penalty policy
        Penalty of the conditional mean embedding (X given D for 'att' and
        'frontdoor', X given V for 'cate'); unused otherwise.
    kernel_y : KernelConfig or None
        Outcome kernel; ``None`` uses the median heuristic on Y.
    """

    def __init__(self, estimand: str = "ate", penalty: Penalty = "loocv",
                 embedding_penalty: Penalty = "loocv", kernel_d=None, kernel_v=None,
                 kernel_x=None, kernel_y=None, heuristic: Heuristic = "median",
                 penalty_grid=None):
        self.estimand = estimand
        self.penalty = penalty
        self.embedding_penalty = embedding_penalty
        self.kernel_d = kernel_d
        self.kernel_v = kernel_v
        self.kernel_x = kernel_x
        self.kernel_y = kernel_y
        self.heuristic = heuristic
        self.penalty_grid = penalty_grid

    def fit(self, Y, D, X, V=None):
        if self.estimand not in DISTRIBUTION_ESTIMANDS:
            raise ConfigurationError(f"unknown distribution estimand {self.estimand!r}")
        uses_v = self.estimand == "cate"
        data = Dataset(y=Y, d=D, x=X, v=V)
        design = Design(data, self.kernel_d, self.kernel_x, self.kernel_v, self.heuristic, use_v=uses_v)
        self.kernel_y_ = resolve_kernel(self.kernel_y, data.y, self.heuristic)
        K_YY = gram(data.y, data.y, self.kernel_y_)
        K = design.outcome_gram()
        self.lambda_ = select_penalty(K, K_YY, self.penalty, self.penalty_grid)
        # only the factor is needed: coefficients are solved per evaluation point
        self.outcome_ = fit_ridge(K, np.empty((data.n, 0)), self.lambda_)
        self.inner_ = None
        if self.estimand in ("att", "frontdoor", "cate"):
            K_cond = design.K_VV if uses_v else design.K_DD
            lam = select_penalty(K_cond, design.K_XX, self.embedding_penalty, self.penalty_grid)
            self.inner_ = fit_ridge(K_cond, design.K_XX, lam)
        self.design_ = design
        return self

    def columns(self, d, d_prime=None, v=None, X_alt=None) -> np.ndarray:
        check_is_fitted(self, "outcome_")
        design = self.design_
        if self.estimand == "ate":
            return ate_columns(design, d)
        if self.estimand == "ds":
            if X_alt is None:
                raise ConfigurationError("'ds' embedding needs X_alt")
            return ate_columns(design, d, X_alt)
        if self.estimand == "att":
            if d_prime is None:
                raise ConfigurationError("'att' embedding needs d_prime")
            return att_columns(design, self.inner_, d, d_prime)
        if self.estimand == "cate":
            if v is None:
                raise ConfigurationError("'cate' embedding needs v")
            return cate_columns(design, self.inner_, d, v)
        return frontdoor_columns(design, self.inner_, d)

    def coefficients(self, d, d_prime=None, v=None, X_alt=None) -> np.ndarray:
        """Coefficient vectors (n, m), one column per evaluation point."""
        return self.outcome_.solve(self.columns(d, d_prime, v, X_alt))

    def embed(self, d, d_prime=None, v=None, X_alt=None) -> EmbeddingEstimate:
        """Embedding at a single evaluation point."""
        coef = self.coefficients(_single(d), _single(d_prime), _single(v), X_alt)[:, 0]
        point = {k: val for k, val in (("d", d), ("d_prime", d_prime), ("v", v)) if val is not None}
        return EmbeddingEstimate(coefficients=coef, outcome_points=self.design_.data.y,
                                 outcome_kernel=self.kernel_y_, estimand=f"d_{self.estimand}",
                                 eval_point=point)

    def penalties(self) -> dict:
        check_is_fitted(self, "outcome_")
        out = {"lam3": self.lambda_}
        if self.inner_ is not None:
            out["lam2" if self.estimand == "cate" else "lam1"] = self.inner_.lam
        return out


def _single(point):
    return None if point is None else [point]


def embed_counterfactual(estimand: str, data: Dataset, eval_point: dict, lam3: Penalty = "loocv",
                         lam_embed: Penalty = "loocv", kernel_d=None, kernel_v=None, kernel_x=None,
                         kernel_y=None, heuristic: Heuristic = "median", penalty_grid=None,
                         alt_covariates=None) -> EmbeddingEstimate:
    """Functional form of :class:`CounterfactualDistribution`.

    ``estimand`` accepts 'd_ate', 'd_ds', 'd_att', 'd_cate' (or without the
    prefix); ``eval_point`` holds 'd' and, as needed, 'd_prime' or 'v'.
    """
    key = estimand.lower().removeprefix("d_").removeprefix("d:")
    est = CounterfactualDistribution(key, lam3, lam_embed, kernel_d, kernel_v, kernel_x,
                                     kernel_y, heuristic, penalty_grid)
    est.fit(data.y, data.d, data.x, data.v if key == "cate" else None)
    return est.embed(eval_point["d"], eval_point.get("d_prime"), eval_point.get("v"), alt_covariates)
