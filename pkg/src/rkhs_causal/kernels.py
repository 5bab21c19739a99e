"""Kernel matrices for the exponentiated-quadratic and exact-match families.

Multivariate inputs always use the product of scalar kernels, one lengthscale
per input dimension.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ConfigurationError,
    InsufficientDataError,
    UnsupportedOperationError,
)


class KernelFamily(str, enum.Enum):
    EXP_QUADRATIC = "exp_quadratic"
    EXACT_MATCH = "exact_match"


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family plus per-dimension lengthscales.

    ``ExactMatch`` (the binary kernel for discrete codes) carries no
    lengthscales; ``ExpQuadratic`` needs one strictly positive finite value
    per input dimension.
    """

    family: KernelFamily = KernelFamily.EXP_QUADRATIC
    lengthscales: tuple[float, ...] = field(default=())

    def __post_init__(self):
        family = KernelFamily(self.family)
        object.__setattr__(self, "family", family)
        ls = tuple(float(v) for v in np.atleast_1d(np.asarray(self.lengthscales, dtype=float)))
        object.__setattr__(self, "lengthscales", ls)
        if family is KernelFamily.EXACT_MATCH:
            if ls:
                raise ConfigurationError("exact-match kernel takes no lengthscales")
            return
        if not ls:
            raise ConfigurationError("exp-quadratic kernel needs at least one lengthscale")
        arr = np.asarray(ls)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ConfigurationError(f"lengthscales must be positive and finite, got {ls}")

    @classmethod
    def exp_quadratic(cls, lengthscales) -> "KernelConfig":
        return cls(KernelFamily.EXP_QUADRATIC, tuple(np.atleast_1d(lengthscales)))

    @classmethod
    def exact_match(cls) -> "KernelConfig":
        return cls(KernelFamily.EXACT_MATCH, ())

    @property
    def differentiable(self) -> bool:
        return self.family is KernelFamily.EXP_QUADRATIC

    def to_dict(self) -> dict:
        return {"family": self.family.value, "lengthscales": list(self.lengthscales)}


def as_points(points) -> np.ndarray:
    """Coerce a sample to a 2-D float array of shape (n, dim)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr[:, None]
    elif arr.ndim != 2:
        raise ConfigurationError(f"points must be at most 2-D, got shape {arr.shape}")
    return arr


def gram(points_a, points_b, config: KernelConfig) -> np.ndarray:
    """Kernel matrix with entry (i, j) = k(a_i, b_j)."""
    a = as_points(points_a)
    b = as_points(points_b)
    if a.shape[1] != b.shape[1]:
        raise ConfigurationError(
            f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    if config.family is KernelFamily.EXACT_MATCH:
        out = np.ones((a.shape[0], b.shape[0]))
        for j in range(a.shape[1]):
            out *= a[:, j, None] == b[None, :, j]
        return out

    if len(config.lengthscales) != a.shape[1]:
        raise ConfigurationError(
            f"{len(config.lengthscales)} lengthscales for {a.shape[1]}-dimensional input"
        )
    sq = np.zeros((a.shape[0], b.shape[0]))
    for j, ls in enumerate(config.lengthscales):
        sq += ((a[:, j, None] - b[None, :, j]) / ls) ** 2
    return np.exp(-0.5 * sq)


def grad_kernel_column(points, at: float, config: KernelConfig) -> np.ndarray:
    """Derivative of k(D_i, d) in its second argument, evaluated at d=``at``."""
    if not config.differentiable:
        raise UnsupportedOperationError("exact-match kernel has no derivative")
    pts = as_points(points)
    if pts.shape[1] != 1 or len(config.lengthscales) != 1:
        raise ConfigurationError("kernel derivative requires scalar inputs")
    ls = config.lengthscales[0]
    col = gram(pts, [[at]], config)[:, 0]
    return col * (pts[:, 0] - at) / ls**2


def grad_gram(points, at, config: KernelConfig) -> np.ndarray:
    """Matrix of derivative columns, one per entry of ``at`` (shape n x m)."""
    at = np.atleast_1d(np.asarray(at, dtype=float)).ravel()
    if not config.differentiable:
        raise UnsupportedOperationError("exact-match kernel has no derivative")
    pts = as_points(points)
    if pts.shape[1] != 1 or len(config.lengthscales) != 1:
        raise ConfigurationError("kernel derivative requires scalar inputs")
    ls = config.lengthscales[0]
    diff = pts[:, 0, None] - at[None, :]
    return np.exp(-0.5 * (diff / ls) ** 2) * diff / ls**2


def _lower_median(values: np.ndarray) -> float:
    k = (values.size - 1) // 2
    return float(np.partition(values, k)[k])


def median_heuristic(points) -> tuple[float, ...]:
    """Per-dimension lower median of pairwise absolute distances.

    A zero median falls back to the mean of the strictly positive distances,
    and to 1.0 when every distance is zero.
    """
    pts = as_points(points)
    n = pts.shape[0]
    if n < 2:
        raise InsufficientDataError("median heuristic needs at least 2 points")
    iu = np.triu_indices(n, k=1)
    out = []
    for j in range(pts.shape[1]):
        col = pts[:, j]
        dists = np.abs(col[:, None] - col[None, :])[iu]
        med = _lower_median(dists)
        if med <= 0:
            positive = dists[dists > 0]
            med = float(positive.mean()) if positive.size else 1.0
        out.append(med)
    return tuple(out)


def joint_median_heuristic(points) -> tuple[float, ...]:
    """Single lengthscale from the lower median Euclidean interpoint distance,
    repeated for every dimension."""
    pts = as_points(points)
    n = pts.shape[0]
    if n < 2:
        raise InsufficientDataError("median heuristic needs at least 2 points")
    sq = np.zeros((n, n))
    for j in range(pts.shape[1]):
        sq += (pts[:, j, None] - pts[None, :, j]) ** 2
    dists = np.sqrt(sq[np.triu_indices(n, k=1)])
    med = _lower_median(dists)
    if med <= 0:
        positive = dists[dists > 0]
        med = float(positive.mean()) if positive.size else 1.0
    return (med,) * pts.shape[1]


def median_config(points, joint: bool = False) -> KernelConfig:
    heuristic = joint_median_heuristic if joint else median_heuristic
    return KernelConfig.exp_quadratic(heuristic(points))
