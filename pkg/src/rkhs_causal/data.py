from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import SchemaError
from .kernels import as_points


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented sample: outcome ``y``, treatment ``d``, covariates ``x``
    and an optional interpretable covariate ``v``.

    ``d``, ``x`` and ``v`` are stored as 2-D arrays (n, dim); ``y`` as (n,).
    """

    y: np.ndarray
    d: np.ndarray
    x: np.ndarray
    v: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        d = as_points(self.d)
        x = as_points(self.x)
        v = None if self.v is None else as_points(self.v)
        n = y.shape[0]
        for name, block in (("d", d), ("x", x), ("v", v)):
            if block is not None and block.shape[0] != n:
                raise SchemaError(f"block {name!r} has {block.shape[0]} rows, expected {n}")
        for name, block in (("y", y), ("d", d), ("x", x), ("v", v)):
            if block is not None and not np.all(np.isfinite(block)):
                raise SchemaError(f"block {name!r} contains non-finite values")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def require_v(self) -> np.ndarray:
        if self.v is None:
            raise SchemaError("estimand needs the interpretable covariate block 'v'")
        return self.v

    def columns(self) -> dict[str, np.ndarray]:
        """Named columns in the CSV role convention (y, d, v, x1..xp)."""
        cols = {"y": self.y}
        cols.update(_named("d", self.d))
        if self.v is not None:
            cols.update(_named("v", self.v))
        cols.update({f"x{j + 1}": self.x[:, j] for j in range(self.x.shape[1])})
        return cols


def _named(role: str, block: np.ndarray) -> dict[str, np.ndarray]:
    if block.shape[1] == 1:
        return {role: block[:, 0]}
    return {f"{role}{j + 1}": block[:, j] for j in range(block.shape[1])}


def check_covariates(x_alt, dim: int) -> np.ndarray:
    x_alt = as_points(x_alt)
    if x_alt.shape[1] != dim:
        raise SchemaError(f"alternative covariates have dimension {x_alt.shape[1]}, expected {dim}")
    if x_alt.shape[0] == 0:
        raise SchemaError("alternative covariate sample is empty")
    return x_alt
