"""Closed-form kernel estimators of dose, heterogeneous and incremental
response curves.

Every estimator is ``Y^T (K + n*lam*I)^{-1} c`` where ``K`` is the elementwise
product of block Gram matrices and ``c`` is a column that already integrates
the covariates (an averaged kernel column or a conditional mean embedding).
The column builders live here so the distribution and front-door estimators
can share them with a different outer system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data import Dataset, check_covariates
from .exceptions import ConfigurationError, SchemaError
from .kernels import (
    KernelConfig,
    as_points,
    gram,
    grad_gram,
    joint_median_heuristic,
    median_heuristic,
)
from .ridge import Penalty, RidgeSolution, fit_ridge, select_penalty

Heuristic = Literal["median", "joint_median"]

ESTIMANDS = ("ate", "ds", "att", "cate", "inc_ate", "inc_att")


@dataclass(frozen=True, eq=False)
class CurveEstimate:
    """Estimated causal function on an evaluation grid.

    ``grid`` has one row per evaluation point; for two-argument estimands the
    columns are the first argument's coordinates followed by the second's.
    """

    grid: np.ndarray
    values: np.ndarray
    estimand: str
    penalties: dict = field(default_factory=dict)
    kernels: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.values) != len(self.grid):
            raise ValueError("values and grid lengths differ")


def resolve_kernel(config: KernelConfig | None, points, heuristic: Heuristic = "median") -> KernelConfig:
    if config is not None:
        return config
    if heuristic == "median":
        return KernelConfig.exp_quadratic(median_heuristic(points))
    if heuristic == "joint_median":
        return KernelConfig.exp_quadratic(joint_median_heuristic(points))
    raise ConfigurationError(f"unknown lengthscale heuristic {heuristic!r}")


class Design:
    """Block Gram matrices of one training sample."""

    def __init__(self, data: Dataset, kernel_d=None, kernel_x=None, kernel_v=None,
                 heuristic: Heuristic = "median", use_v: bool = False):
        self.data = data
        self.kernel_d = resolve_kernel(kernel_d, data.d, heuristic)
        self.kernel_x = resolve_kernel(kernel_x, data.x, heuristic)
        self.K_DD = gram(data.d, data.d, self.kernel_d)
        self.K_XX = gram(data.x, data.x, self.kernel_x)
        self.kernel_v = None
        self.K_VV = None
        if use_v:
            v = data.require_v()
            self.kernel_v = resolve_kernel(kernel_v, v, heuristic)
            self.K_VV = gram(v, v, self.kernel_v)

    @property
    def n(self) -> int:
        return self.data.n

    def kernels(self) -> dict:
        out = {"d": self.kernel_d.to_dict(), "x": self.kernel_x.to_dict()}
        if self.kernel_v is not None:
            out["v"] = self.kernel_v.to_dict()
        return out

    def outcome_gram(self) -> np.ndarray:
        """Gram of the regression of Y on (D, X), or (D, V, X) when V is used."""
        K = self.K_DD * self.K_XX
        if self.K_VV is not None:
            K = K * self.K_VV
        return K

    # columns: each builder returns an (n, m) matrix, one column per grid point

    def treatment_columns(self, d, derivative: bool = False) -> np.ndarray:
        d = self._points(d, self.data.d.shape[1], "d")
        if derivative:
            return grad_gram(self.data.d, d[:, 0], self.kernel_d)
        return gram(self.data.d, d, self.kernel_d)

    def covariate_columns(self, x) -> np.ndarray:
        return gram(self.data.x, x, self.kernel_x)

    def mean_covariate_column(self, x_alt=None) -> np.ndarray:
        """Averaged column n^{-1} sum_i K_{X x_i} over the training or an
        alternative covariate sample."""
        if x_alt is None:
            return self.K_XX.mean(axis=1)
        return self.covariate_columns(check_covariates(x_alt, self.data.x.shape[1])).mean(axis=1)

    def conditional_embedding(self, inner: RidgeSolution, conditioning_columns: np.ndarray) -> np.ndarray:
        """Evaluations at the training X of the conditional mean embedding,
        ``K_XX (K_CC + n*lam*I)^{-1} K_Cc``."""
        return self.K_XX @ inner.solve(conditioning_columns)

    def _points(self, pts, dim: int, name: str) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.ndim <= 1 and dim == 1:
            pts = pts.reshape(-1, 1)
        pts = as_points(pts)
        if pts.shape[1] != dim:
            raise SchemaError(f"{name} evaluation points have dimension {pts.shape[1]}, expected {dim}")
        return pts

    def v_columns(self, v) -> np.ndarray:
        vv = self.data.require_v()
        v = self._points(v, vv.shape[1], "v")
        return gram(vv, v, self.kernel_v)


def _paired(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[0] != b.shape[0]:
        raise ConfigurationError("paired evaluation points must have the same length")
    return a, b


# column builders ------------------------------------------------------------

def ate_columns(design: Design, d, x_alt=None, derivative: bool = False) -> np.ndarray:
    """``K_Dd (or its derivative) * mean_i K_{X x_i}`` over training or
    alternative covariates."""
    mean_x = design.mean_covariate_column(x_alt)
    return design.treatment_columns(d, derivative=derivative) * mean_x[:, None]


def att_columns(design: Design, inner: RidgeSolution, d, d_prime, derivative: bool = False) -> np.ndarray:
    """``K_Dd' * K_XX (K_DD + n*lam1*I)^{-1} K_Dd``; ``inner`` factors K_DD."""
    d, d_prime = _paired(d, d_prime)
    emb = design.conditional_embedding(inner, design.treatment_columns(d))
    return design.treatment_columns(d_prime, derivative=derivative) * emb


def cate_columns(design: Design, inner: RidgeSolution, d, v) -> np.ndarray:
    """``K_Dd * K_Vv * K_XX (K_VV + n*lam2*I)^{-1} K_Vv``; ``inner`` factors K_VV."""
    d, v = _paired(d, v)
    K_Vv = design.v_columns(v)
    emb = design.conditional_embedding(inner, K_Vv)
    return design.treatment_columns(d) * K_Vv * emb


def frontdoor_columns(design: Design, inner: RidgeSolution, d) -> np.ndarray:
    """``mean_i K_{D d_i} * K_XX (K_DD + n*lam1*I)^{-1} K_Dd``.

    The embedding factor does not depend on i, so averaging the treatment
    columns first is exact.
    """
    emb = design.conditional_embedding(inner, design.treatment_columns(d))
    return design.K_DD.mean(axis=1)[:, None] * emb


class _CausalEstimator(BaseEstimator):
    """Shared fit logic: block Grams, the outcome regression and penalties."""

    _uses_v = False

    def _fit_design(self, Y, D, X, V=None) -> Design:
        data = Dataset(y=Y, d=D, x=X, v=V)
        design = Design(data, self.kernel_d, self.kernel_x, getattr(self, "kernel_v", None),
                        self.heuristic, use_v=self._uses_v)
        K = design.outcome_gram()
        self.lambda_ = select_penalty(K, data.y, self.penalty, self.penalty_grid)
        self.outcome_ = fit_ridge(K, data.y, self.lambda_)
        self.design_ = design
        return design

    def _fit_inner(self, K_cond: np.ndarray) -> RidgeSolution:
        # multi-output regression of phi(X) on the conditioning variable:
        # targets are the columns of K_XX
        lam = select_penalty(K_cond, self.design_.K_XX, self.embedding_penalty, self.penalty_grid)
        return fit_ridge(K_cond, self.design_.K_XX, lam)

    def _evaluate(self, columns: np.ndarray) -> np.ndarray:
        return self.outcome_.dual_weights @ columns

    def penalties(self) -> dict:
        check_is_fitted(self, "outcome_")
        out = {"lam": self.lambda_}
        inner = getattr(self, "inner_", None)
        if inner is not None:
            out[self._inner_name] = inner.lam
        return out


class DoseResponse(_CausalEstimator):
    """Dose response curve E[Y^(d)], its incremental version, and the
    distribution-shift curve under an alternative covariate population.

    Parameters
    ----------
    penalty : float, {'loocv', 'gcv'} or TheoreticalRate
        Ridge penalty of the outcome regression.
    kernel_d, kernel_x : KernelConfig or None
        ``None`` picks exp-quadratic lengthscales with ``heuristic``.
    heuristic : {'median', 'joint_median'}
        'median' gives each dimension its own median interpoint distance;
        'joint_median' uses the median Euclidean distance for every dimension.
    penalty_grid : array-like or None
        Candidate penalties for cross validation.
    """

    def __init__(self, penalty: Penalty = "loocv", kernel_d=None, kernel_x=None,
                 heuristic: Heuristic = "median", penalty_grid=None):
        self.penalty = penalty
        self.kernel_d = kernel_d
        self.kernel_x = kernel_x
        self.heuristic = heuristic
        self.penalty_grid = penalty_grid

    def fit(self, Y, D, X):
        self._fit_design(Y, D, X)
        return self

    def predict(self, d) -> np.ndarray:
        check_is_fitted(self, "outcome_")
        return self._evaluate(ate_columns(self.design_, d))

    def predict_shifted(self, d, X_alt) -> np.ndarray:
        check_is_fitted(self, "outcome_")
        return self._evaluate(ate_columns(self.design_, d, X_alt))

    def predict_gradient(self, d) -> np.ndarray:
        check_is_fitted(self, "outcome_")
        return self._evaluate(ate_columns(self.design_, d, derivative=True))


class TreatedResponse(_CausalEstimator):
    """Dose response for the treated, E[Y^(d') | D=d], and its derivative in d'.

    ``embedding_penalty`` regularizes the conditional mean embedding of X
    given D; it accepts the same policies as ``penalty``.
    """

    _inner_name = "lam1"

    def __init__(self, penalty: Penalty = "loocv", embedding_penalty: Penalty = "loocv",
                 kernel_d=None, kernel_x=None, heuristic: Heuristic = "median", penalty_grid=None):
        self.penalty = penalty
        self.embedding_penalty = embedding_penalty
        self.kernel_d = kernel_d
        self.kernel_x = kernel_x
        self.heuristic = heuristic
        self.penalty_grid = penalty_grid

    def fit(self, Y, D, X):
        design = self._fit_design(Y, D, X)
        self.inner_ = self._fit_inner(design.K_DD)
        return self

    def predict(self, d, d_prime) -> np.ndarray:
        check_is_fitted(self, "outcome_")
        return self._evaluate(att_columns(self.design_, self.inner_, d, d_prime))

    def predict_gradient(self, d, d_prime) -> np.ndarray:
        check_is_fitted(self, "outcome_")
        return self._evaluate(att_columns(self.design_, self.inner_, d, d_prime, derivative=True))


class ConditionalResponse(_CausalEstimator):
    """Heterogeneous response curve E[Y^(d) | V=v].

    ``embedding_penalty`` regularizes the conditional mean embedding of X
    given V.
    """

    _uses_v = True
    _inner_name = "lam2"

    def __init__(self, penalty: Penalty = "loocv", embedding_penalty: Penalty = "loocv",
                 kernel_d=None, kernel_v=None, kernel_x=None, heuristic: Heuristic = "median",
                 penalty_grid=None):
        self.penalty = penalty
        self.embedding_penalty = embedding_penalty
        self.kernel_d = kernel_d
        self.kernel_v = kernel_v
        self.kernel_x = kernel_x
        self.heuristic = heuristic
        self.penalty_grid = penalty_grid

    def fit(self, Y, D, V, X):
        design = self._fit_design(Y, D, X, V)
        self.inner_ = self._fit_inner(design.K_VV)
        return self

    def predict(self, d, v) -> np.ndarray:
        check_is_fitted(self, "outcome_")
        return self._evaluate(cate_columns(self.design_, self.inner_, d, v))


# functional interface -------------------------------------------------------

def _split_pairs(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 2 or grid.shape[1] != 2:
        raise ConfigurationError("two-argument estimands need an (m, 2) grid of pairs")
    return grid[:, 0], grid[:, 1]


def _curve(estimator, grid, values, estimand) -> CurveEstimate:
    grid = np.asarray(grid, dtype=float)
    return CurveEstimate(
        grid=grid.reshape(len(values), -1),
        values=np.asarray(values, dtype=float),
        estimand=estimand,
        penalties=estimator.penalties(),
        kernels=estimator.design_.kernels(),
    )


def estimate_ate(data: Dataset, grid, lam: Penalty = "loocv", kernel_d=None, kernel_x=None,
                 heuristic: Heuristic = "median", penalty_grid=None) -> CurveEstimate:
    est = DoseResponse(lam, kernel_d, kernel_x, heuristic, penalty_grid).fit(data.y, data.d, data.x)
    return _curve(est, grid, est.predict(grid), "ate")


def estimate_ds(data: Dataset, alt_covariates, grid, lam: Penalty = "loocv", kernel_d=None,
                kernel_x=None, heuristic: Heuristic = "median", penalty_grid=None) -> CurveEstimate:
    if alt_covariates is None:
        raise SchemaError("distribution-shift estimand needs an alternative covariate sample")
    alt = check_covariates(alt_covariates, data.x.shape[1])
    est = DoseResponse(lam, kernel_d, kernel_x, heuristic, penalty_grid).fit(data.y, data.d, data.x)
    return _curve(est, grid, est.predict_shifted(grid, alt), "ds")


def estimate_att(data: Dataset, grid, lam: Penalty = "loocv", lam1: Penalty = "loocv",
                 kernel_d=None, kernel_x=None, heuristic: Heuristic = "median",
                 penalty_grid=None) -> CurveEstimate:
    d, d_prime = _split_pairs(grid)
    est = TreatedResponse(lam, lam1, kernel_d, kernel_x, heuristic, penalty_grid)
    est.fit(data.y, data.d, data.x)
    return _curve(est, grid, est.predict(d, d_prime), "att")


def estimate_cate(data: Dataset, grid, lam: Penalty = "loocv", lam2: Penalty = "loocv",
                  kernel_d=None, kernel_v=None, kernel_x=None, heuristic: Heuristic = "median",
                  penalty_grid=None) -> CurveEstimate:
    d, v = _split_pairs(grid)
    est = ConditionalResponse(lam, lam2, kernel_d, kernel_v, kernel_x, heuristic, penalty_grid)
    est.fit(data.y, data.d, data.require_v(), data.x)
    return _curve(est, grid, est.predict(d, v), "cate")


def estimate_incremental(data: Dataset, grid, lam: Penalty = "loocv", kernel_d=None,
                         kernel_x=None, heuristic: Heuristic = "median", penalty_grid=None,
                         treated: bool = False, lam1: Penalty = "loocv") -> CurveEstimate:
    """Incremental response curve; ``treated=True`` gives the derivative of
    the treated response in its second argument over an (m, 2) grid."""
    if treated:
        d, d_prime = _split_pairs(grid)
        est = TreatedResponse(lam, lam1, kernel_d, kernel_x, heuristic, penalty_grid)
        est.fit(data.y, data.d, data.x)
        return _curve(est, grid, est.predict_gradient(d, d_prime), "inc_att")
    est = DoseResponse(lam, kernel_d, kernel_x, heuristic, penalty_grid).fit(data.y, data.d, data.x)
    return _curve(est, grid, est.predict_gradient(grid), "inc_ate")
