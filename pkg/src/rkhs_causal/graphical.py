"""Front-door estimators of E[Y | do(D=d)].

X is the mediator block. For the back-door case use
:class:`rkhs_causal.causal.DoseResponse`: adjusting for a back-door set gives
the same closed form as the dose response curve.
"""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_is_fitted

from .causal import CurveEstimate, Heuristic, _CausalEstimator, _curve, frontdoor_columns
from .data import Dataset
from .distributions import CounterfactualDistribution, EmbeddingEstimate
from .ridge import Penalty


class FrontDoorResponse(_CausalEstimator):
    """Front-door causal function.

    ``penalty`` regularizes the regression of Y on (D, X);
    ``embedding_penalty`` the conditional mean embedding of X given D.
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

    def predict(self, d) -> np.ndarray:
        check_is_fitted(self, "outcome_")
        return self._evaluate(frontdoor_columns(self.design_, self.inner_, d))


def estimate_frontdoor(data: Dataset, grid, lam: Penalty = "loocv", lam1: Penalty = "loocv",
                       kernel_d=None, kernel_x=None, heuristic: Heuristic = "median",
                       penalty_grid=None) -> CurveEstimate:
    est = FrontDoorResponse(lam, lam1, kernel_d, kernel_x, heuristic, penalty_grid)
    est.fit(data.y, data.d, data.x)
    return _curve(est, grid, est.predict(grid), "frontdoor")


def embed_frontdoor(data: Dataset, d, lam3: Penalty = "loocv", lam1: Penalty = "loocv",
                    kernel_d=None, kernel_x=None, kernel_y=None, heuristic: Heuristic = "median",
                    penalty_grid=None) -> EmbeddingEstimate:
    """Embedding of the front-door counterfactual distribution at ``d``;
    herd it with :func:`rkhs_causal.distributions.herd`."""
    est = CounterfactualDistribution("frontdoor", lam3, lam1, kernel_d=kernel_d, kernel_x=kernel_x,
                                     kernel_y=kernel_y, heuristic=heuristic, penalty_grid=penalty_grid)
    est.fit(data.y, data.d, data.x)
    return est.embed(d)
