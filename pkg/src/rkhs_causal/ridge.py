"""Kernel ridge regression with the n*lambda penalty convention.

``fit_ridge`` solves ``(K + n*lam*I) alpha = targets`` via Cholesky. The
validation losses use the hat matrix ``H = I - K (K + n*lam*I)^{-1}``; the
sweep in :func:`tune_lambda` reuses one eigendecomposition of ``K`` so every
candidate costs O(n^2 t) instead of a fresh factorization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    ConfigurationError,
    DegenerateHatMatrixError,
    NumericalError,
    ShapeError,
    TuningError,
)
from .kernels import KernelConfig, as_points, gram, median_heuristic

logger = logging.getLogger(__name__)

MAX_JITTER_RETRIES = 6

Criterion = Literal["loocv", "gcv"]


@dataclass(frozen=True)
class TheoreticalRate:
    """Rate-optimal schedule ``lam = n ** (-1 / (c + 1/b))``."""

    b: float = float("inf")
    c: float = 2.0

    def __post_init__(self):
        if not (self.b >= 1):
            raise ConfigurationError(f"b must be >= 1, got {self.b}")
        if not (1 < self.c <= 2):
            raise ConfigurationError(f"c must lie in (1, 2], got {self.c}")

    def __call__(self, n: int) -> float:
        return theoretical_lambda(n, self.b, self.c)


Penalty = Union[float, str, TheoreticalRate]


def theoretical_lambda(n: int, b: float, c: float) -> float:
    if n < 1:
        raise ConfigurationError("n must be a positive count")
    if not (b >= 1):
        raise ConfigurationError(f"b must be >= 1, got {b}")
    if not (1 < c <= 2):
        raise ConfigurationError(f"c must lie in (1, 2], got {c}")
    return float(n) ** (-1.0 / (c + 1.0 / b))


def default_grid(num: int = 50, low: float = 1e-8, high: float = 1e2) -> np.ndarray:
    return np.logspace(np.log10(low), np.log10(high), num)


def check_grid(grid) -> np.ndarray:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ConfigurationError("penalty grid is empty")
    if not np.all(np.isfinite(grid)) or np.any(grid <= 0):
        raise ConfigurationError("penalty grid entries must be positive and finite")
    if np.any(np.diff(grid) <= 0):
        raise ConfigurationError("penalty grid must be strictly increasing")
    return grid


def _check_square(K) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ShapeError(f"Gram matrix must be square, got shape {K.shape}")
    return K


def _check_lambda(lam) -> float:
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0:
        raise ConfigurationError(f"ridge penalty must be positive and finite, got {lam}")
    return lam


def _cholesky(K: np.ndarray, lam: float):
    n = K.shape[0]
    A = K + n * lam * np.eye(n)
    base = 1e-12 * abs(np.trace(K)) / n
    jitters = [0.0] + [base * 10**k for k in range(MAX_JITTER_RETRIES)]
    for jitter in jitters:
        try:
            factor = scipy.linalg.cho_factor(A + jitter * np.eye(n), lower=True)
        except np.linalg.LinAlgError:
            continue
        if jitter:
            logger.debug("cholesky succeeded with jitter %g", jitter)
        return factor, jitter
    raise NumericalError(f"cholesky of K + n*lam*I failed; final jitter tried {jitters[-1]:g}")


@dataclass(frozen=True, eq=False)
class RidgeSolution:
    """Factorized ``K + n*lam*I`` with the dual weights for ``targets``."""

    factor: tuple
    dual_weights: np.ndarray
    lam: float
    n: int
    jitter: float = 0.0

    def solve(self, rhs) -> np.ndarray:
        """``(K + n*lam*I)^{-1} rhs`` reusing the stored factor."""
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.n:
            raise ShapeError(f"right-hand side has {rhs.shape[0]} rows, expected {self.n}")
        return scipy.linalg.cho_solve(self.factor, rhs)


def fit_ridge(K, targets, lam: float) -> RidgeSolution:
    K = _check_square(K)
    lam = _check_lambda(lam)
    targets = np.asarray(targets, dtype=float)
    if targets.shape[0] != K.shape[0]:
        raise ShapeError(f"targets have {targets.shape[0]} rows, Gram has {K.shape[0]}")
    factor, jitter = _cholesky(K, lam)
    dual = scipy.linalg.cho_solve(factor, targets)
    return RidgeSolution(factor=factor, dual_weights=dual, lam=lam, n=K.shape[0], jitter=jitter)


def predict(sol: RidgeSolution, k_column) -> np.ndarray | float:
    """``dual_weights^T k_column``; scalar for a single column and one target."""
    k = np.asarray(k_column, dtype=float)
    if k.shape[0] != sol.n:
        raise ShapeError(f"kernel column has length {k.shape[0]}, expected {sol.n}")
    out = sol.dual_weights.T @ k
    return float(out) if np.ndim(out) == 0 else out


def _hat_matrix(K: np.ndarray, lam: float) -> np.ndarray:
    factor, _ = _cholesky(K, lam)
    # (K + n lam I)^{-1} K is the transpose of K (K + n lam I)^{-1}
    return np.eye(K.shape[0]) - scipy.linalg.cho_solve(factor, K).T


def _as_targets(Y, n: int) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.shape[0] != n:
        raise ShapeError(f"targets have {Y.shape[0]} rows, Gram has {n}")
    return Y.reshape(n, -1)


def loocv_loss(K, Y, lam: float) -> float:
    """Closed-form leave-one-out loss ``n^{-1} ||diag(H)^{-1} H Y||^2``.

    Multi-column targets sum the per-column losses.
    """
    K = _check_square(K)
    lam = _check_lambda(lam)
    Y = _as_targets(Y, K.shape[0])
    H = _hat_matrix(K, lam)
    h = np.diag(H)
    if np.any(h == 0):
        raise DegenerateHatMatrixError(f"hat matrix has a zero diagonal entry at lam={lam:g}")
    resid = (H @ Y) / h[:, None]
    return float(np.sum(resid**2) / K.shape[0])


def gcv_loss(K, Y, lam: float) -> float:
    """``n^{-1} ||Tr(H)^{-1} H Y||^2``.

    This differs from classical GCV ``n ||H Y||^2 / Tr(H)^2`` by the constant
    ``n^2`` only, so the minimizer is the same.
    """
    K = _check_square(K)
    lam = _check_lambda(lam)
    Y = _as_targets(Y, K.shape[0])
    H = _hat_matrix(K, lam)
    tr = np.trace(H)
    if tr == 0:
        raise DegenerateHatMatrixError(f"hat matrix has zero trace at lam={lam:g}")
    return float(np.sum((H @ Y / tr) ** 2) / K.shape[0])


class _SpectralSweep:
    """Validation losses for many penalties from one eigendecomposition."""

    def __init__(self, K: np.ndarray, Y: np.ndarray):
        self.n = K.shape[0]
        self.eigvals, self.eigvecs = scipy.linalg.eigh(K)
        self.rotated = self.eigvecs.T @ Y
        self.sq_vecs = self.eigvecs**2

    def loss(self, lam: float, criterion: str) -> float:
        shrink = self.n * lam / (self.eigvals + self.n * lam)
        HY = self.eigvecs @ (shrink[:, None] * self.rotated)
        if criterion == "loocv":
            h = self.sq_vecs @ shrink
            if np.any(h == 0):
                raise DegenerateHatMatrixError(f"zero hat diagonal at lam={lam:g}")
            return float(np.sum((HY / h[:, None]) ** 2) / self.n)
        tr = shrink.sum()
        if tr == 0:
            raise DegenerateHatMatrixError(f"zero hat trace at lam={lam:g}")
        return float(np.sum((HY / tr) ** 2) / self.n)


def tune_lambda(K, Y, grid=None, criterion: Criterion = "loocv") -> tuple[float, np.ndarray]:
    """Grid element minimizing the validation loss; ties go to the larger penalty.

    Degenerate candidates get an infinite loss.
    """
    if criterion not in ("loocv", "gcv"):
        raise ConfigurationError(f"unknown tuning criterion {criterion!r}")
    K = _check_square(K)
    grid = default_grid() if grid is None else check_grid(grid)
    Y = _as_targets(Y, K.shape[0])
    sweep = _SpectralSweep(K, Y)
    losses = np.empty(grid.size)
    for i, lam in enumerate(grid):
        try:
            losses[i] = sweep.loss(lam, criterion)
        except DegenerateHatMatrixError:
            losses[i] = np.inf
    losses[~np.isfinite(losses)] = np.inf
    if np.all(np.isinf(losses)):
        raise TuningError("every penalty candidate was degenerate")
    best = np.flatnonzero(losses == losses.min())[-1]
    return float(grid[best]), losses


def select_penalty(K, targets, penalty: Penalty, grid=None) -> float:
    """Resolve a penalty policy (number, 'loocv', 'gcv' or TheoreticalRate)."""
    if isinstance(penalty, TheoreticalRate):
        return penalty(np.asarray(K).shape[0])
    if isinstance(penalty, str):
        lam, _ = tune_lambda(K, targets, grid, criterion=penalty.lower())
        return lam
    return _check_lambda(penalty)


class KernelRidgeRegressor(RegressorMixin, BaseEstimator):
    """Kernel ridge regression estimator.

    Parameters
    ----------
    kernel : KernelConfig or None
        Kernel on the inputs. ``None`` sets exp-quadratic lengthscales by the
        median heuristic at fit time.
    penalty : float, {'loocv', 'gcv'} or TheoreticalRate
        Ridge penalty, or the policy used to pick it.
    grid : array-like or None
        Candidate penalties for 'loocv'/'gcv'.
    """

    def __init__(self, kernel: KernelConfig | None = None, penalty: Penalty = "loocv", grid=None):
        self.kernel = kernel
        self.penalty = penalty
        self.grid = grid

    def fit(self, X, y):
        X = as_points(X)
        y = np.asarray(y, dtype=float)
        if y.shape[0] != X.shape[0]:
            raise ShapeError("X and y have different numbers of rows")
        kernel = self.kernel or KernelConfig.exp_quadratic(median_heuristic(X))
        K = gram(X, X, kernel)
        self.kernel_ = kernel
        self.lambda_ = select_penalty(K, y, self.penalty, self.grid)
        self.solution_ = fit_ridge(K, y, self.lambda_)
        self.X_fit_ = X
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        return predict(self.solution_, gram(self.X_fit_, X, self.kernel_))
