"""
Grid-based type distributions.

TypeGrid is a finite distribution over ascending support points. Density grids
additionally carry cell edges: cell i spans [edges[i], edges[i+1]], holds
weights[i] of mass spread uniformly and is represented by points[i]. The cells
tile [lo, hi], so cdf() is exact for the piecewise-uniform density the grid
stands for, while all expectations are plain sums over points.
"""

from enum import Enum
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ratchet_pricing.config import MASS_TOL


class GridKind(str, Enum):
    """How a grid's weights were obtained."""

    DISCRETE = "discrete"
    DENSITY = "discretized-density"


def _frozen_array(value) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


def _support_tol(x: float) -> float:
    return 1e-12 * max(1.0, abs(x))


class TypeGrid(BaseModel):
    """Finite distribution of a scalar type on ascending support points."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    points: np.ndarray = Field(..., description="Strictly ascending support points")
    weights: np.ndarray = Field(..., description="Probability mass per point")
    kind: GridKind = Field(GridKind.DISCRETE, description="discrete or discretized-density")
    edges: Optional[np.ndarray] = Field(
        None, description="Cell edges (n+1 values) for discretized densities"
    )

    @field_validator("points", "weights", mode="before")
    @classmethod
    def to_array(cls, v):
        return _frozen_array(v)

    @field_validator("edges", mode="before")
    @classmethod
    def edges_to_array(cls, v):
        if v is None:
            return None
        return _frozen_array(v)

    @model_validator(mode="after")
    def check_invariants(self):
        if self.points.ndim != 1 or self.weights.ndim != 1:
            raise ValueError("points and weights must be one-dimensional")
        if self.points.size == 0:
            raise ValueError("grid must have at least one point")
        if self.points.size != self.weights.size:
            raise ValueError(
                f"points ({self.points.size}) and weights ({self.weights.size}) differ in length"
            )
        if np.any(np.diff(self.points) <= 0):
            raise ValueError("points must be strictly ascending")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        total = float(self.weights.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        if self.kind == GridKind.DENSITY:
            if self.edges is None:
                raise ValueError("discretized-density grids need cell edges")
            if self.edges.size != self.points.size + 1 or np.any(np.diff(self.edges) <= 0):
                raise ValueError("edges must be n+1 strictly ascending values")
        return self

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def lo(self) -> float:
        return float(self.points[0])

    @property
    def hi(self) -> float:
        return float(self.points[-1])

    @property
    def step(self) -> float:
        """Largest spacing between adjacent points (0 for a point mass)."""
        if self.size < 2:
            return 0.0
        return float(np.max(np.diff(self.points)))

    def mean(self) -> float:
        return float(np.dot(self.weights, self.points))

    def cdf(self, x):
        """P(theta <= x); cell-linear for density grids, right-continuous otherwise."""
        xs = np.asarray(x, dtype=np.float64)
        if self.kind == GridKind.DENSITY and self.edges is not None:
            cum = np.concatenate(([0.0], np.cumsum(self.weights)))
            out = np.interp(xs, self.edges, cum, left=0.0, right=1.0)
        else:
            cum = np.concatenate(([0.0], np.cumsum(self.weights)))
            idx = np.searchsorted(self.points, xs + 1e-12 * np.maximum(1.0, np.abs(xs)), side="right")
            out = cum[idx]
        return float(out) if np.ndim(out) == 0 else out

    def survival(self, x: float) -> float:
        """Mass at or above x, i.e. the share of types that buy at price x."""
        return float(self.weights[self.points >= x - _support_tol(x)].sum())

    def index_of(self, x: float) -> int:
        """Index of the support point equal to x (within float tolerance)."""
        idx = int(np.argmin(np.abs(self.points - x)))
        if abs(self.points[idx] - x) > _support_tol(x):
            raise ValueError(f"{x} is not a support point of the grid")
        return idx

    def with_weights(self, weights: np.ndarray) -> "TypeGrid":
        """Same support and cells, new (renormalized) masses."""
        w = np.clip(np.asarray(weights, dtype=np.float64), 0.0, None)
        return TypeGrid(points=self.points, weights=w / w.sum(), kind=self.kind, edges=self.edges)

    def to_summary(self) -> dict:
        return {
            "kind": self.kind.value,
            "n": self.size,
            "lo": self.lo,
            "hi": self.hi,
            "mean": self.mean(),
        }


class MarkovKernel(BaseModel):
    """Conditional distribution of next period's type given this period's type."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    from_grid: TypeGrid
    to_grid: TypeGrid
    rows: np.ndarray = Field(..., description="rows[i, l] = P(theta' = to[l] | theta = from[i])")
    x1_tag: Optional[int] = Field(
        None, description="First-period allocation the kernel conditions on (complements)"
    )

    @field_validator("rows", mode="before")
    @classmethod
    def to_array(cls, v):
        return _frozen_array(v)

    @model_validator(mode="after")
    def check_rows(self):
        expected = (self.from_grid.size, self.to_grid.size)
        if self.rows.shape != expected:
            raise ValueError(f"rows have shape {self.rows.shape}, expected {expected}")
        if np.any(self.rows < 0):
            raise ValueError("kernel entries must be nonnegative")
        sums = self.rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > MASS_TOL):
            worst = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"row {worst} sums to {sums[worst]!r}, expected 1")
        if self.x1_tag not in (None, 0, 1):
            raise ValueError("x1_tag must be 0, 1 or None")
        return self

    def row(self, i: int) -> TypeGrid:
        return self.to_grid.with_weights(self.rows[i])

    def conditional_means(self) -> np.ndarray:
        return self.rows @ self.to_grid.points

    def conditional_cdfs(self) -> np.ndarray:
        """cdf_table[i, l] = P(theta' <= to[l] | from[i])."""
        return np.cumsum(self.rows, axis=1)

    def shares_grids_with(self, other: "MarkovKernel") -> bool:
        return (
            self.from_grid.size == other.from_grid.size
            and self.to_grid.size == other.to_grid.size
            and np.allclose(self.from_grid.points, other.from_grid.points, rtol=0, atol=1e-12)
            and np.allclose(self.to_grid.points, other.to_grid.points, rtol=0, atol=1e-12)
        )


class Ar1Spec(BaseModel):
    """One AR(1) step: theta_t = alpha * theta_{t-1} + eps, eps ~ noise."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alpha: float = Field(..., description="Slope on last period's type")
    noise: TypeGrid = Field(..., description="Innovation distribution")
    noise_mass: Optional[Callable] = Field(
        None,
        exclude=True,
        description="Exact P(a < eps <= b) for arrays a <= b, used instead of cell masses",
    )


Ar1Chain = List[Ar1Spec]
