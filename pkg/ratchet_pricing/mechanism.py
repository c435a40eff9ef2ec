"""
Virtual values and the mechanism-design relaxation.

Revenue of any threshold mechanism (cutoff k, second-period prices p_A after
a purchase and p_R after none, first-period price making type k indifferent)
equals

    E[phi 1{theta1 >= k}] + delta E[psi (1{theta1 >= k} 1{theta2 >= p_A}
                                         + 1{theta1 < k} 1{theta2 >= p_R})]
    - delta E[(theta2 - p_R)+ | lowest theta1]

The grid versions below are exact on the discretized instance: the hazard is
tail mass times spacing over cell mass, and the impulse response comes from
forward differences of the conditional cdfs across first-period types, which
is what the buyer's envelope condition produces on a grid. Maximizing over
p_A >= p_R bounds the revenue of every equilibrium.
"""

import concurrent.futures
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ratchet_pricing.config import THREADS, TIE_TOL
from ratchet_pricing.dist_core import compose, partial_expectation_table, survival_table
from ratchet_pricing.domain.distributions import MarkovKernel, TypeGrid
from ratchet_pricing.domain.problem import PricingProblem
from ratchet_pricing.domain.results import (
    CommitmentResult,
    DiagonalCertificate,
    RelaxedSolution,
    VirtualValueTable,
)
from ratchet_pricing.exceptions import (
    ConstraintViolatedError,
    GridMismatchError,
    NonMonotoneBoundaryError,
    ZeroDensityError,
)
from ratchet_pricing.pricing import evaluate_commitment, no_sale_price

# ---------------------------------------------------------------------------
# Hazard, impulse response, virtual values
# ---------------------------------------------------------------------------


def _spacing(points: np.ndarray) -> np.ndarray:
    """x[i+1] - x[i], with 0 for the last point."""
    return np.append(np.diff(points), 0.0)


def first_period_hazard(prior: TypeGrid) -> np.ndarray:
    """(1 - F1)/f1 on the grid: mass strictly above i times spacing over mass at i."""
    m = prior.weights
    above = np.append(np.cumsum(m[::-1])[::-1][1:], 0.0)
    if np.any((m <= 0) & (above > 0)):
        bad = int(np.argmax((m <= 0) & (above > 0)))
        raise ZeroDensityError(f"prior cell {bad} (theta1={prior.points[bad]}) has zero mass")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(m > 0, above * _spacing(prior.points) / np.where(m > 0, m, 1.0), 0.0)


def impulse_mass(kernel: MarkovKernel) -> np.ndarray:
    """
    -dF2/dtheta1 times the theta2 spacing, per cell.

    Forward difference across from-points (backward on the last row). This is
    f*I, and stays meaningful where f itself is zero.
    """
    cdf = kernel.conditional_cdfs()
    n1 = cdf.shape[0]
    if n1 < 2:
        return np.zeros_like(cdf)
    d1 = np.diff(kernel.from_grid.points)
    forward = -(cdf[1:] - cdf[:-1]) / d1[:, None]
    slope = np.vstack([forward, forward[-1:]])
    return slope * _spacing(kernel.to_grid.points)[None, :]


def impulse_validity(kernel: MarkovKernel) -> np.ndarray:
    """Cells whose own mass, theta2 neighbours and next-row mass are all positive."""
    f = kernel.rows
    pos = f > 0
    left = np.ones_like(pos)
    left[:, 1:] = pos[:, :-1]
    right = np.ones_like(pos)
    right[:, :-1] = pos[:, 1:]
    nxt = np.ones_like(pos)
    if f.shape[0] > 1:
        nxt[:-1] = pos[1:]
        nxt[-1] = pos[-2]
    return pos & left & right & nxt


def impulse_response(kernel: MarkovKernel) -> np.ndarray:
    """I = -(dF2/dtheta1)/f2; zero-density cells get 0 and are marked invalid elsewhere."""
    f = kernel.rows
    mass = impulse_mass(kernel)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(f > 0, mass / np.where(f > 0, f, 1.0), 0.0)


def virtual_values(prior: TypeGrid, kernel: MarkovKernel, x1: Optional[int] = None) -> VirtualValueTable:
    hazard = first_period_hazard(prior)
    impulse = impulse_response(kernel)
    psi = kernel.to_grid.points[None, :] - hazard[:, None] * impulse
    return VirtualValueTable(
        phi=prior.points - hazard,
        hazard=hazard,
        psi=psi,
        impulse=impulse,
        valid=impulse_validity(kernel),
        x1=x1 if x1 is not None else kernel.x1_tag,
    )


def boundary_curve(table: VirtualValueTable, theta2: np.ndarray, validate: bool = True) -> np.ndarray:
    """
    D(theta1): smallest theta2 with psi >= 0, over well-defined cells.

    theta2's lowest point when psi >= 0 on the whole row, its highest when
    psi < 0 everywhere.
    """
    psi = table.psi
    curve = np.empty(psi.shape[0])
    for j in range(psi.shape[0]):
        cells = table.valid[j] if table.valid[j].any() else np.ones(psi.shape[1], dtype=bool)
        row = psi[j, cells]
        pts = theta2[cells]
        nonneg = row >= 0
        if nonneg.all():
            curve[j] = theta2[0]
        elif not nonneg.any():
            curve[j] = theta2[-1]
        else:
            curve[j] = pts[int(np.argmax(nonneg))]
    if validate:
        rises = np.flatnonzero(np.diff(curve) > 1e-12)
        if rises.size:
            j = int(rises[0])
            raise NonMonotoneBoundaryError(
                f"boundary rises from {curve[j]:.6g} to {curve[j + 1]:.6g} at theta1 index {j}"
            )
    return curve


def effective_boundary(curve0: np.ndarray, curve1: np.ndarray, theta1: np.ndarray, k: float) -> np.ndarray:
    """D0 below the cutoff, D1 at and above it."""
    return np.where(theta1 < k - 1e-12 * max(1.0, abs(k)), curve0, curve1)


# ---------------------------------------------------------------------------
# Relaxation tables
# ---------------------------------------------------------------------------


class RelaxationTables:
    """
    Prefix and suffix sums of the relaxation objective.

    Prices are the shared theta2 support plus one no-sale price; index q means
    "theta2 types at or above to[q] buy". value(k, a, r) is then
    phi_tail[k] + delta*(accept[k, a] + reject[k, r] - low_option[r]).
    """

    def __init__(self, problem: PricingProblem):
        if not problem.shared_to_grid:
            raise GridMismatchError("purchase and no-purchase kernels need a common theta2 grid")
        prior = problem.prior
        self.problem = problem
        self.delta = problem.delta
        self.theta1 = prior.points
        self.to_points = problem.kernel_accept.to_grid.points
        self.prices = np.append(self.to_points, no_sale_price(problem.kernel_accept.to_grid))
        self.n1 = prior.size
        self.n2 = self.to_points.size
        m = prior.weights
        hazard = first_period_hazard(prior)
        self.phi = prior.points - hazard

        def weights(kernel: MarkovKernel) -> np.ndarray:
            w = m[:, None] * (kernel.rows * self.to_points[None, :] - hazard[:, None] * impulse_mass(kernel))
            # suffix over theta2: column q sums cells l >= q; column n2 (no sale) is 0
            return np.hstack([np.cumsum(w[:, ::-1], axis=1)[:, ::-1], np.zeros((self.n1, 1))])

        w_accept = weights(problem.kernel_accept)
        w_reject = weights(problem.kernel_reject)
        zero_row = np.zeros((1, self.n2 + 1))
        # accept[k] sums rows i >= k, reject[k] sums rows i < k; k runs 0..n1
        self.accept = np.vstack([np.cumsum(w_accept[::-1], axis=0)[::-1], zero_row])
        self.reject = np.vstack([zero_row, np.cumsum(w_reject, axis=0)])
        self.phi_tail = np.append(np.cumsum((m * self.phi)[::-1])[::-1], 0.0)
        low_row = partial_expectation_table(problem.kernel_reject, self.prices)[0]
        self.low_option = low_row

    def value(self, k: int, a: int, r: int) -> float:
        return float(
            self.phi_tail[k]
            + self.delta * (self.accept[k, a] + self.reject[k, r] - self.low_option[r])
        )

    def k_value(self, k: int) -> float:
        return float(self.theta1[k]) if k < self.n1 else no_sale_price(self.problem.prior)

    def price_index(self, p: float) -> int:
        """Index of the lowest support point >= p (no-sale index above the support)."""
        tol = 1e-12 * max(1.0, abs(p))
        return int(np.searchsorted(self.to_points, p - tol, side="left"))

    def cutoff_index(self, k: float) -> int:
        tol = 1e-12 * max(1.0, abs(k))
        return int(np.searchsorted(self.theta1, k - tol, side="left"))

    def best_ordered(self, ks: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """For each k in ks: best value over a >= r with the lowest (a, r) among ties."""
        inner = self.reject[ks] - self.low_option[None, :]
        prefix = np.maximum.accumulate(inner, axis=1)
        cols = np.arange(inner.shape[1])
        record = np.ones_like(inner, dtype=bool)
        record[:, 1:] = inner[:, 1:] > prefix[:, :-1] + TIE_TOL
        r_at = np.maximum.accumulate(np.where(record, cols[None, :], 0), axis=1)
        total = self.accept[ks] + prefix
        best_a = np.empty(ks.size, dtype=int)
        for row in range(ks.size):
            top = total[row].max()
            best_a[row] = int(np.argmax(total[row] >= top - TIE_TOL * max(1.0, abs(top))))
        best_r = r_at[np.arange(ks.size), best_a]
        values = self.phi_tail[ks] + self.delta * total[np.arange(ks.size), best_a]
        return values, best_a, best_r


def relaxation_tables(problem: PricingProblem) -> RelaxationTables:
    return RelaxationTables(problem)


def relaxed_value(
    k: float,
    p_A: float,
    p_R: float,
    problem: PricingProblem,
    tables: Optional[RelaxationTables] = None,
) -> float:
    """
    Relaxation objective at cutoff k and prices p_A >= p_R.

    Prices between support points are evaluated at the next support point up,
    which sells to the same types.
    """
    if p_A < p_R:
        raise ConstraintViolatedError(f"relaxation needs p_A >= p_R, got p_A={p_A}, p_R={p_R}")
    t = tables or RelaxationTables(problem)
    return t.value(t.cutoff_index(k), t.price_index(p_A), t.price_index(p_R))


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


def _slices(n: int, threads: int) -> List[np.ndarray]:
    return [s for s in np.array_split(np.arange(n), max(1, threads)) if s.size]


def solve_relaxed(
    problem: PricingProblem,
    threads: int = THREADS,
    check: bool = True,
) -> RelaxedSolution:
    """
    Exhaustive grid search over (k, p_A, p_R) with p_A >= p_R.

    k slices are searched in parallel and merged by value, then lowest
    (k, p_A, p_R), so the result does not depend on the schedule.
    """
    certified = True
    if check:
        from ratchet_pricing.assumptions import check_problem, summarize

        reports = check_problem(problem)
        certified = all(r.holds for r in reports)
        if not certified:
            logger.warning(f"relaxation bound not certified: {summarize(reports)}")

    tables = RelaxationTables(problem)
    logger.info(f"Solving relaxation on {tables.n1 + 1} cutoffs x {tables.n2 + 1} prices")
    chunks = _slices(tables.n1 + 1, threads)
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        parts = list(executor.map(tables.best_ordered, chunks))

    values = np.concatenate([p[0] for p in parts])
    best_a = np.concatenate([p[1] for p in parts])
    best_r = np.concatenate([p[2] for p in parts])
    top = float(values.max())
    k = int(np.argmax(values >= top - TIE_TOL * max(1.0, abs(top))))
    a, r = int(best_a[k]), int(best_r[k])
    p_A, p_R = float(tables.prices[a]), float(tables.prices[r])
    step = problem.kernel_accept.to_grid.step

    curve = _boundary_for(problem, tables.k_value(k))
    solution = RelaxedSolution(
        k=tables.k_value(k),
        p_A=p_A,
        p_R=p_R,
        value=float(values[k]),
        collapse=abs(p_A - p_R) <= step + 1e-12,
        certified=certified,
        boundary_curve=curve,
        k_index=k,
        sells_nothing=(k == tables.n1 and r == tables.n2),
    )
    logger.info(f"Relaxed optimum {solution.value:.6f} at k={solution.k:.6g}, p_A={p_A:.6g}, p_R={p_R:.6g}")
    return solution


def _boundary_for(problem: PricingProblem, k: float) -> List[float]:
    to_points = problem.kernel_accept.to_grid.points
    try:
        curve1 = boundary_curve(virtual_values(problem.prior, problem.kernel_accept), to_points)
        if not problem.complements:
            return curve1.tolist()
        curve0 = boundary_curve(virtual_values(problem.prior, problem.kernel_reject), to_points)
        return effective_boundary(curve0, curve1, problem.theta1, k).tolist()
    except NonMonotoneBoundaryError as e:
        logger.warning(f"boundary curve not monotone: {e}")
        return boundary_curve(
            virtual_values(problem.prior, problem.kernel_accept), to_points, validate=False
        ).tolist()


def claim1_certify(
    problem: PricingProblem,
    k: float,
    tables: Optional[RelaxationTables] = None,
) -> DiagonalCertificate:
    """
    Compare the best p_A = p_R point with the best p_A > p_R point at cutoff k.

    gap = off-diagonal best - diagonal best; gap <= 0 means posting one
    second-period price is optimal for this cutoff.
    """
    t = tables or RelaxationTables(problem)
    ki = t.cutoff_index(k)
    inner = t.reject[ki] - t.low_option
    diag = t.accept[ki] + inner
    q = int(np.argmax(diag >= diag.max() - TIE_TOL * max(1.0, abs(diag.max()))))
    base = t.phi_tail[ki]
    diagonal_value = float(base + t.delta * diag[q])
    if inner.size > 1:
        strictly_below = np.maximum.accumulate(inner)[:-1]
        off = t.accept[ki, 1:] + strictly_below
        off_value = float(base + t.delta * off.max())
    else:
        off_value = -np.inf
    gap = off_value - diagonal_value
    return DiagonalCertificate(
        k=t.k_value(ki),
        p2=float(t.prices[q]),
        diagonal_value=diagonal_value,
        off_diagonal_value=off_value,
        gap=gap,
    )


def commitment_optimum(problem: PricingProblem) -> CommitmentResult:
    """
    Seller-optimal committed triple (p1, p_A, p_R) with no ordering constraint.

    For a cutoff k the first-period price makes type k indifferent, which
    splits revenue into a part in p_A and a part in p_R; each is maximized
    separately. Ties go to the triple with p_A closest to p_R, then lowest.
    """
    if not problem.shared_to_grid:
        raise GridMismatchError("purchase and no-purchase kernels need a common theta2 grid")
    theta = problem.theta1
    m = problem.prior.weights
    delta = problem.delta
    prices = np.append(problem.kernel_accept.to_grid.points, no_sale_price(problem.kernel_accept.to_grid))

    e_accept = partial_expectation_table(problem.kernel_accept, prices)
    e_reject = partial_expectation_table(problem.kernel_reject, prices)
    s_accept = survival_table(problem.kernel_accept, prices)
    s_reject = survival_table(problem.kernel_reject, prices)
    mass_tail = np.cumsum(m[::-1])[::-1]
    sold_accept = np.cumsum((m[:, None] * s_accept)[::-1], axis=0)[::-1]
    sold_reject = np.vstack([np.zeros((1, prices.size)), np.cumsum(m[:, None] * s_reject, axis=0)])

    best: Optional[Tuple[float, float, int, int, int]] = None
    for k in range(theta.size + 1):
        if k < theta.size:
            part_a = mass_tail[k] * e_accept[k] + prices * sold_accept[k]
            part_r = prices * sold_reject[k] - mass_tail[k] * e_reject[k]
            base = mass_tail[k] * theta[k]
        else:
            part_a = np.zeros(prices.size)
            part_r = prices * sold_reject[k]
            base = 0.0
        a_set = _near_max(part_a)
        r_set = _near_max(part_r)
        a, r = min(((a, r) for a in a_set for r in r_set), key=lambda ar: (abs(prices[ar[0]] - prices[ar[1]]), ar))
        value = float(base + delta * (part_a[a] + part_r[r]))
        key = (value, abs(prices[a] - prices[r]), k, a, r)
        if best is None or _better(key, best):
            best = key

    value, _, k, a, r = best
    p_A, p_R = float(prices[a]), float(prices[r])
    if k < theta.size:
        h = e_reject[k, r] - e_accept[k, a]
        p1 = float(theta[k] - delta * h)
    else:
        p1 = no_sale_price(problem.prior)
    check = evaluate_commitment(p1, p_A, p_R, problem)
    if abs(check.revenue - value) > 1e-9:
        logger.warning(
            f"committed triple ({p1:.6g}, {p_A:.6g}, {p_R:.6g}) is not answered by a threshold: "
            f"{value:.6f} vs {check.revenue:.6f}"
        )
    return check


def _near_max(values: np.ndarray) -> np.ndarray:
    top = values.max()
    return np.flatnonzero(values >= top - TIE_TOL * max(1.0, abs(top)))


def _better(key, best) -> bool:
    tol = TIE_TOL * max(1.0, abs(best[0]))
    if key[0] > best[0] + tol:
        return True
    if key[0] < best[0] - tol:
        return False
    return key[1:] < best[1:]


# ---------------------------------------------------------------------------
# Payoff equivalence and the multi-period relaxation
# ---------------------------------------------------------------------------


def interim_payoff_derivative(problem: PricingProblem, p1: float, p2: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Buyer payoff slope under posted prices (p1, p2), two ways.

    Returns (finite difference of V, envelope formula) at every theta1 except
    the last: 1{accept} + delta * sum over theta2 >= p2 of f*I.
    """
    kernel_a, kernel_r = problem.kernel_accept, problem.kernel_reject
    theta = problem.theta1
    delta = problem.delta
    e_a = partial_expectation_table(kernel_a, np.array([p2]))[:, 0]
    e_r = partial_expectation_table(kernel_r, np.array([p2]))[:, 0]
    accept_payoff = theta - p1 + delta * e_a
    reject_payoff = delta * e_r
    payoff = np.maximum(accept_payoff, reject_payoff)
    finite = np.diff(payoff) / np.diff(theta)

    accept = accept_payoff >= reject_payoff
    q = int(np.searchsorted(kernel_a.to_grid.points, p2 - 1e-12 * max(1.0, abs(p2)), side="left"))
    tail_a = impulse_mass(kernel_a)[:, q:].sum(axis=1)
    tail_r = impulse_mass(kernel_r)[:, q:].sum(axis=1)
    formula = np.where(accept, 1.0 + delta * tail_a, delta * tail_r)
    return finite, formula[:-1]


def _chain_kernels(prior: TypeGrid, kernels: Sequence[MarkovKernel]) -> List[MarkovKernel]:
    """Kernels theta1 -> theta_t for t = 2..T."""
    out: List[MarkovKernel] = []
    current: Optional[MarkovKernel] = None
    for kernel in kernels:
        current = kernel if current is None else compose(current, kernel)
        out.append(current)
    return out


def relaxed_value_multi(
    prior: TypeGrid,
    kernels: Sequence[MarkovKernel],
    slopes: Sequence[float],
    delta: float,
    k: float,
    prices: Sequence[float],
) -> float:
    """
    Multi-period relaxation with posted later-period prices.

    Period t uses psi_t = theta_t - hazard(theta1) * prod(alpha_2..alpha_t),
    and the lowest first-period type keeps its option value in every period.
    """
    hazard = first_period_hazard(prior)
    m = prior.weights
    theta = prior.points
    cut = theta >= k - 1e-12 * max(1.0, abs(k))
    value = float(np.dot(m[cut], theta[cut] - hazard[cut]))
    coefficient = 1.0
    for t, (kernel, slope, price) in enumerate(zip(_chain_kernels(prior, kernels), slopes, prices), start=2):
        coefficient *= slope
        pts = kernel.to_grid.points
        buys = pts >= price - 1e-12 * max(1.0, abs(price))
        psi = pts[None, :] - coefficient * hazard[:, None]
        gain = float(np.sum(m[:, None] * kernel.rows * psi * buys[None, :]))
        low = float(np.dot(kernel.rows[0], np.maximum(pts - price, 0.0)))
        value += delta ** (t - 1) * (gain - low)
    return value


def solve_relaxed_multi(
    prior: TypeGrid,
    kernels: Sequence[MarkovKernel],
    slopes: Sequence[float],
    delta: float,
) -> Tuple[float, List[float], float]:
    """
    Maximize relaxed_value_multi: later-period terms separate, so each price is
    chosen on its own and the cutoff is searched over the first-period grid.

    Returns (value, per-period prices starting with the cutoff, cutoff).
    """
    hazard = first_period_hazard(prior)
    m = prior.weights
    theta = prior.points
    first = np.cumsum((m * (theta - hazard))[::-1])[::-1]
    k_index = int(np.argmax(first >= first.max() - TIE_TOL * max(1.0, abs(first.max()))))
    value = float(max(first[k_index], 0.0))
    k = float(theta[k_index]) if first[k_index] >= 0 else no_sale_price(prior)
    chosen = [k]
    coefficient = 1.0
    for t, (kernel, slope) in enumerate(zip(_chain_kernels(prior, kernels), slopes), start=2):
        coefficient *= slope
        pts = kernel.to_grid.points
        cell = (m[:, None] * kernel.rows * (pts[None, :] - coefficient * hazard[:, None])).sum(axis=0)
        gains = np.cumsum(cell[::-1])[::-1]
        lows = np.array([np.dot(kernel.rows[0], np.maximum(pts - p, 0.0)) for p in pts])
        term = gains - lows
        q = int(np.argmax(term >= term.max() - TIE_TOL * max(1.0, abs(term.max()))))
        if term[q] < 0:
            chosen.append(no_sale_price(kernel.to_grid))
            continue
        chosen.append(float(pts[q]))
        value += delta ** (t - 1) * float(term[q])
    return value, chosen, k
