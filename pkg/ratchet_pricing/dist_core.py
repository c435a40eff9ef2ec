"""
Distribution core for ratchet pricing.

Builds finite-grid representations of the buyer's type process and provides
the expectation machinery every solver uses. Continuous families are turned
into cell masses on equal-width cells, so all later computation is exact on
the discretized instance.

Key functions:
- make_uniform() / make_truncated_normal() / grid_from_cdf(): density grids
- make_discrete(): exact finite distributions
- kernel_from_ar1(): AR(1) transition projected on a common to-grid
- truncate() / posterior(): seller beliefs after a threshold decision
- partial_expectation(): E[(theta - p)+], the option value of a price
- marginal() / compose(): period-t marginals for the multi-period model
"""

from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from loguru import logger
from scipy.stats import norm

from ratchet_pricing.config import MASS_TOL, NORMAL_WIDTH
from ratchet_pricing.domain.distributions import Ar1Spec, GridKind, MarkovKernel, TypeGrid
from ratchet_pricing.exceptions import (
    EmptyEventError,
    EmptyTruncationError,
    GridMismatchError,
    InvalidBoundsError,
    InvalidInputError,
)


class Side(str, Enum):
    GEQ = "geq"
    LT = "lt"


class Condition(str, Enum):
    """Conditioning events on the first-period type."""

    GEQ = "geq"
    LT = "lt"
    EQ = "eq"


def _cut_tol(k: float) -> float:
    return 1e-12 * max(1.0, abs(k))


def _cells(lo: float, hi: float, n: int):
    return np.linspace(lo, hi, n), np.linspace(lo, hi, n + 1)


def _normalized(masses: np.ndarray) -> np.ndarray:
    masses = np.clip(masses, 0.0, None)
    total = masses.sum()
    if total <= MASS_TOL:
        raise EmptyEventError("distribution retains no probability mass")
    return masses / total


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def make_uniform(lo: float, hi: float, n: int) -> TypeGrid:
    """Uniform density on [lo, hi] as n equal-mass cells."""
    if not lo < hi:
        raise InvalidBoundsError(f"uniform needs lo < hi, got lo={lo}, hi={hi}")
    if n < 2:
        raise InvalidBoundsError(f"uniform grid needs at least 2 points, got {n}")
    points, edges = _cells(lo, hi, n)
    return TypeGrid(points=points, weights=np.full(n, 1.0 / n), kind=GridKind.DENSITY, edges=edges)


def grid_from_cdf(
    lo: float,
    hi: float,
    n: int,
    cdf: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    mass: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
) -> TypeGrid:
    """
    Discretize a continuous law on [lo, hi].

    Cell masses are cdf differences, or mass(left, right) when given (which
    avoids cancellation in the upper tail).
    """
    if not lo < hi:
        raise InvalidBoundsError(f"grid needs lo < hi, got lo={lo}, hi={hi}")
    if n < 2:
        raise InvalidBoundsError(f"grid needs at least 2 points, got {n}")
    if cdf is None and mass is None:
        raise InvalidInputError("grid_from_cdf needs a cdf or an interval mass function")
    points, edges = _cells(lo, hi, n)
    if mass is not None:
        masses = np.asarray(mass(edges[:-1], edges[1:]), dtype=np.float64)
    else:
        masses = np.diff(np.asarray(cdf(edges), dtype=np.float64))
    try:
        weights = _normalized(masses)
    except EmptyEventError as e:
        raise InvalidBoundsError(f"cdf puts no mass on [{lo}, {hi}]") from e
    return TypeGrid(points=points, weights=weights, kind=GridKind.DENSITY, edges=edges)


def gaussian_mass(mu: float, sigma: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """P(a < X <= b) for X ~ N(mu, sigma^2), using the upper tail above the mean."""

    def mass(a, b):
        za = (np.asarray(a, dtype=np.float64) - mu) / sigma
        zb = (np.asarray(b, dtype=np.float64) - mu) / sigma
        return np.where(za >= 0, norm.sf(za) - norm.sf(zb), norm.cdf(zb) - norm.cdf(za))

    return mass


def make_truncated_normal(mu: float, sigma: float, n: int, width: float = NORMAL_WIDTH) -> TypeGrid:
    """Gaussian N(mu, sigma^2) truncated to mu +/- width*sigma."""
    if sigma <= 0:
        raise InvalidBoundsError(f"sigma must be positive, got {sigma}")
    if width <= 0:
        raise InvalidBoundsError(f"truncation width must be positive, got {width}")
    return grid_from_cdf(mu - width * sigma, mu + width * sigma, n, mass=gaussian_mass(mu, sigma))


def make_discrete(points: Sequence[float], weights: Sequence[float]) -> TypeGrid:
    pts = np.asarray(points, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if pts.shape != w.shape or pts.ndim != 1 or pts.size == 0:
        raise InvalidInputError("points and weights must be equal-length, nonempty sequences")
    if np.any(np.diff(pts) <= 0):
        raise InvalidInputError(f"points must be strictly ascending, got {pts.tolist()}")
    if np.any(w < 0):
        raise InvalidInputError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise InvalidInputError(f"weights sum to {w.sum()}, expected 1")
    return TypeGrid(points=pts, weights=w / w.sum(), kind=GridKind.DISCRETE)


def point_mass(value: float) -> TypeGrid:
    return make_discrete([value], [1.0])


def shift_grid(grid: TypeGrid, kappa: float) -> TypeGrid:
    """Translate the support by kappa, keeping the masses."""
    edges = None if grid.edges is None else grid.edges + kappa
    return TypeGrid(points=grid.points + kappa, weights=grid.weights, kind=grid.kind, edges=edges)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def _project_linear(positions: np.ndarray, masses: np.ndarray, to_points: np.ndarray) -> np.ndarray:
    """Split each atom between its two neighbouring to-points, preserving mass and mean."""
    out = np.zeros(to_points.size)
    if to_points.size == 1:
        out[0] = masses.sum()
        return out
    idx = np.clip(np.searchsorted(to_points, positions, side="right") - 1, 0, to_points.size - 2)
    span = to_points[idx + 1] - to_points[idx]
    frac = np.clip((positions - to_points[idx]) / span, 0.0, 1.0)
    np.add.at(out, idx, masses * (1.0 - frac))
    np.add.at(out, idx + 1, masses * frac)
    return out


def ar1_to_grid(spec: Ar1Spec, from_grid: TypeGrid, n_to: int) -> TypeGrid:
    """Common support of alpha*theta + eps over all from-points."""
    shifts = spec.alpha * from_grid.points
    lo = float(shifts.min() + spec.noise.lo)
    hi = float(shifts.max() + spec.noise.hi)
    density = GridKind.DENSITY in (spec.noise.kind, from_grid.kind)
    if hi - lo <= _cut_tol(lo):
        return point_mass(lo)
    points, edges = _cells(lo, hi, n_to)
    if density:
        return TypeGrid(points=points, weights=np.full(n_to, 1.0 / n_to), kind=GridKind.DENSITY, edges=edges)
    return TypeGrid(points=points, weights=np.full(n_to, 1.0 / n_to), kind=GridKind.DISCRETE)


def kernel_from_ar1(
    spec: Ar1Spec,
    from_grid: TypeGrid,
    n_to: int,
    to_grid: Optional[TypeGrid] = None,
) -> MarkovKernel:
    """
    Discretize theta' = alpha*theta + eps.

    Row i is the law of alpha*points[i] + eps on a to-grid covering
    [alpha*min + eps_min, alpha*max + eps_max] (or on to_grid when given, so
    that several kernels can share one support). Density noise is integrated
    cell by cell; discrete noise atoms are split linearly between neighbours.
    """
    if n_to < 2:
        raise InvalidBoundsError(f"kernel needs at least 2 to-points, got {n_to}")
    target = to_grid if to_grid is not None else ar1_to_grid(spec, from_grid, n_to)
    shifts = spec.alpha * from_grid.points
    noise = spec.noise

    if noise.kind == GridKind.DENSITY and target.edges is not None:
        offsets = target.edges[None, :] - shifts[:, None]
        if spec.noise_mass is not None:
            # exact law truncated to the span of the noise cells
            offsets = np.clip(offsets, noise.edges[0], noise.edges[-1])
            rows = np.asarray(spec.noise_mass(offsets[:, :-1], offsets[:, 1:]), dtype=np.float64)
        else:
            rows = np.diff(noise.cdf(offsets), axis=1)
    else:
        rows = np.vstack(
            [_project_linear(s + noise.points, noise.weights, target.points) for s in shifts]
        )

    rows = np.clip(rows, 0.0, None)
    totals = rows.sum(axis=1, keepdims=True)
    if np.any(totals <= MASS_TOL):
        raise EmptyEventError("to-grid does not cover the support of every kernel row")
    logger.debug(f"AR(1) kernel alpha={spec.alpha}: {from_grid.size} x {target.size}")
    return MarkovKernel(from_grid=from_grid, to_grid=target, rows=rows / totals)


def gaussian_ar1(alpha: float, mu: float, sigma: float, n: int, width: float = NORMAL_WIDTH) -> Ar1Spec:
    """AR(1) step with truncated N(mu, sigma^2) innovations."""
    noise = make_truncated_normal(mu, sigma, n, width)
    return Ar1Spec(alpha=alpha, noise=noise, noise_mass=gaussian_mass(mu, sigma))


def uniform_ar1(alpha: float, lo: float, hi: float, n: int) -> Ar1Spec:
    return Ar1Spec(alpha=alpha, noise=make_uniform(lo, hi, n))


def kernel_from_table(
    from_grid: TypeGrid,
    to_points: Sequence[float],
    rows: Sequence[Sequence[float]],
    x1_tag: Optional[int] = None,
) -> MarkovKernel:
    table = np.asarray(rows, dtype=np.float64)
    if table.ndim != 2 or table.shape[0] != from_grid.size:
        raise GridMismatchError(f"table needs {from_grid.size} rows, got shape {table.shape}")
    if np.any(table < 0):
        raise InvalidInputError("kernel table entries must be nonnegative")
    sums = table.sum(axis=1, keepdims=True)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        raise InvalidInputError("every kernel table row must sum to 1")
    pts = np.asarray(to_points, dtype=np.float64)
    if pts.ndim != 1 or pts.size != table.shape[1]:
        raise GridMismatchError(f"table has {table.shape[1]} columns for {pts.size} to-points")
    # to-grid masses are a placeholder; rows carry the conditional laws
    to_grid = make_discrete(pts, np.full(pts.size, 1.0 / pts.size))
    return MarkovKernel(from_grid=from_grid, to_grid=to_grid, rows=table / sums, x1_tag=x1_tag)


def independent_kernel(from_grid: TypeGrid, second: TypeGrid) -> MarkovKernel:
    rows = np.tile(second.weights, (from_grid.size, 1))
    return MarkovKernel(from_grid=from_grid, to_grid=second, rows=rows)


def perfect_correlation_kernel(grid: TypeGrid) -> MarkovKernel:
    return MarkovKernel(from_grid=grid, to_grid=grid, rows=np.eye(grid.size))


def with_x1_tag(kernel: MarkovKernel, x1: int) -> MarkovKernel:
    return kernel.model_copy(update={"x1_tag": x1})


# ---------------------------------------------------------------------------
# Conditioning and expectations
# ---------------------------------------------------------------------------


def _side_mask(grid: TypeGrid, k: float, side: Side) -> np.ndarray:
    upper = grid.points >= k - _cut_tol(k)
    return upper if Side(side) == Side.GEQ else ~upper


def truncate(grid: TypeGrid, k: float, side: Side) -> TypeGrid:
    """Restrict to {points >= k} or {points < k} and renormalize; k joins the upper side."""
    mask = _side_mask(grid, k, side)
    mass = float(grid.weights[mask].sum())
    if mass < MASS_TOL:
        raise EmptyTruncationError(f"truncation at {k} ({Side(side).value}) retains no mass")
    idx = np.flatnonzero(mask)
    edges = None
    if grid.edges is not None:
        edges = grid.edges[idx[0] : idx[-1] + 2]
    return TypeGrid(
        points=grid.points[mask],
        weights=grid.weights[mask] / mass,
        kind=grid.kind,
        edges=edges,
    )


def split_mass(grid: TypeGrid, k: float) -> float:
    """P(theta >= k)."""
    return float(grid.weights[_side_mask(grid, k, Side.GEQ)].sum())


def posterior(kernel: MarkovKernel, prior: TypeGrid, cond: Condition, k: float) -> TypeGrid:
    """
    Law of theta2 given a first-period event.

    GEQ/LT mix kernel rows with the truncated prior; EQ picks the single row
    at the support point k, which is how off-path beliefs are represented.
    """
    if prior.size != kernel.from_grid.size or not np.allclose(
        prior.points, kernel.from_grid.points, rtol=0, atol=1e-12
    ):
        raise GridMismatchError("prior and kernel from-grid differ")
    cond = Condition(cond)
    if cond == Condition.EQ:
        try:
            return kernel.row(prior.index_of(k))
        except ValueError as e:
            raise EmptyEventError(f"theta1 = {k} is not a support point") from e
    mask = _side_mask(prior, k, Side(cond.value))
    w = np.where(mask, prior.weights, 0.0)
    if w.sum() < MASS_TOL:
        raise EmptyEventError(f"event theta1 {cond.value} {k} has zero mass")
    return kernel.to_grid.with_weights((w / w.sum()) @ kernel.rows)


def partial_expectation(grid: TypeGrid, p: float) -> float:
    """E[(theta - p)+]."""
    return float(np.dot(grid.weights, np.maximum(grid.points - p, 0.0)))


def partial_expectation_table(kernel: MarkovKernel, prices: np.ndarray) -> np.ndarray:
    """table[i, j] = E[(theta2 - prices[j])+ | theta1 = from[i]]."""
    gains = np.maximum(kernel.to_grid.points[None, :] - np.asarray(prices)[:, None], 0.0)
    return kernel.rows @ gains.T


def survival_table(kernel: MarkovKernel, prices: np.ndarray) -> np.ndarray:
    """table[i, j] = P(theta2 >= prices[j] | theta1 = from[i])."""
    prices = np.asarray(prices, dtype=np.float64)
    tol = 1e-12 * np.maximum(1.0, np.abs(prices))
    buys = kernel.to_grid.points[None, :] >= (prices - tol)[:, None]
    return kernel.rows @ buys.T.astype(np.float64)


def marginal(prior: TypeGrid, kernel: MarkovKernel) -> TypeGrid:
    """Law of theta2 implied by the prior and the kernel."""
    if prior.size != kernel.from_grid.size:
        raise GridMismatchError("prior and kernel from-grid differ")
    return kernel.to_grid.with_weights(prior.weights @ kernel.rows)


def compose(first: MarkovKernel, second: MarkovKernel) -> MarkovKernel:
    """Two-step kernel theta_t -> theta_{t+2}."""
    if first.to_grid.size != second.from_grid.size or not np.allclose(
        first.to_grid.points, second.from_grid.points, rtol=0, atol=1e-12
    ):
        raise GridMismatchError("first kernel's to-grid is not the second kernel's from-grid")
    rows = first.rows @ second.rows
    return MarkovKernel(
        from_grid=first.from_grid,
        to_grid=second.to_grid,
        rows=rows / rows.sum(axis=1, keepdims=True),
    )
