"""
Buyer and seller primitives of the two-period pricing game.

The buyer compares g(theta1) = (theta1 - p1)/delta against
h(theta1) = E[(theta2 - p_R)+ | theta1, x1=0] - E[(theta2 - p_A)+ | theta1, x1=1],
the option value lost by revealing a purchase. Acceptance at exact
indifference counts as acceptance, so thresholds belong to the accepting set.
"""

from typing import List, Optional

import numpy as np
from loguru import logger

from ratchet_pricing.config import TIE_TOL
from ratchet_pricing.dist_core import marginal, partial_expectation_table, survival_table
from ratchet_pricing.domain.distributions import MarkovKernel, TypeGrid
from ratchet_pricing.domain.problem import PricingProblem
from ratchet_pricing.domain.results import (
    BenchmarkResult,
    CommitmentResult,
    MonopolyResult,
    ThresholdResult,
)
from ratchet_pricing.exceptions import InvalidInputError, MultipleCrossingsError


def no_sale_price(grid: TypeGrid) -> float:
    """A price strictly above the support, at which nobody buys."""
    return grid.hi + max(grid.step, 1.0)


def _accept_tol(*values: float) -> float:
    return 1e-12 * max(1.0, *(abs(v) for v in values))


# ---------------------------------------------------------------------------
# Monopoly pricing
# ---------------------------------------------------------------------------


def _revenue_curve(grid: TypeGrid):
    survival = np.cumsum(grid.weights[::-1])[::-1]
    revenue = grid.points * survival
    candidates = grid.weights > 0
    return revenue, candidates


def monopoly_prices(grid: TypeGrid, tol: float = TIE_TOL) -> List[float]:
    """Every support point whose revenue p*P(theta >= p) is maximal within tol."""
    revenue, candidates = _revenue_curve(grid)
    best = float(revenue[candidates].max())
    if best < 0:
        return [no_sale_price(grid)]
    ties = candidates & (revenue >= best - tol * max(1.0, abs(best)))
    return [float(p) for p in grid.points[ties]]


def monopoly_price(grid: TypeGrid) -> MonopolyResult:
    """Revenue-maximizing posted price; ties go to the lowest price."""
    revenue, candidates = _revenue_curve(grid)
    best = float(revenue[candidates].max())
    if best < 0:
        return MonopolyResult(price=no_sale_price(grid), revenue=0.0, unique=True)
    prices = monopoly_prices(grid)
    return MonopolyResult(price=prices[0], revenue=best, unique=len(prices) == 1)


# ---------------------------------------------------------------------------
# Buyer
# ---------------------------------------------------------------------------


def h_function(kernel_accept: MarkovKernel, kernel_reject: MarkovKernel, p_A: float, p_R: float) -> np.ndarray:
    """h(theta1) per from-point."""
    reject = partial_expectation_table(kernel_reject, np.array([p_R]))[:, 0]
    accept = partial_expectation_table(kernel_accept, np.array([p_A]))[:, 0]
    return reject - accept


def acceptance_gain(p1: float, p_A: float, p_R: float, problem: PricingProblem) -> np.ndarray:
    """(theta1 - p1) - delta*h(theta1): payoff of accepting minus payoff of rejecting."""
    h = h_function(problem.kernel_accept, problem.kernel_reject, p_A, p_R)
    return (problem.theta1 - p1) - problem.delta * h


def buyer_accepts(theta1: float, p1: float, p_A: float, p_R: float, problem: PricingProblem) -> bool:
    try:
        i = problem.prior.index_of(theta1)
    except ValueError as e:
        raise InvalidInputError(f"theta1={theta1} is not on the first-period grid") from e
    gain = acceptance_gain(p1, p_A, p_R, problem)[i]
    return bool(gain >= -_accept_tol(theta1, p1))


def threshold_from_prices(p1: float, p_A: float, p_R: float, problem: PricingProblem) -> ThresholdResult:
    """Smallest accepting grid type, validated to be a cutoff of an upper set."""
    theta = problem.theta1
    gain = acceptance_gain(p1, p_A, p_R, problem)
    tol = 1e-12 * np.maximum(1.0, np.maximum(np.abs(theta), abs(p1)))
    accept = gain >= -tol
    n = theta.size
    if accept.all():
        return ThresholdResult(k=float(theta[0]), k_index=0, all_accept=True, crossing_gap=float(abs(gain[0])))
    if not accept.any():
        return ThresholdResult(
            k=no_sale_price(problem.prior), k_index=n, all_reject=True, crossing_gap=float(abs(gain[-1]))
        )
    k_index = int(np.argmax(accept))
    if not accept[k_index:].all():
        flips = int(np.count_nonzero(np.diff(accept.astype(int))))
        raise MultipleCrossingsError(
            f"acceptance set at (p1={p1}, p_A={p_A}, p_R={p_R}) switches {flips} times"
        )
    gap = float(abs(gain[k_index]))
    if gap <= float(tol[k_index]):
        logger.debug(f"cutoff type {theta[k_index]:.6g} is exactly indifferent")
    return ThresholdResult(k=float(theta[k_index]), k_index=k_index, crossing_gap=gap)


def posting_price(k: float, p_A: float, p_R: Optional[float], problem: PricingProblem) -> float:
    """First-period price that makes type k indifferent: p1 = k - delta*h(k)."""
    if p_R is None:
        p_R = p_A
    try:
        i = problem.prior.index_of(k)
    except ValueError as e:
        raise InvalidInputError(f"cutoff {k} is not on the first-period grid") from e
    h = h_function(problem.kernel_accept, problem.kernel_reject, p_A, p_R)
    return float(problem.theta1[i] - problem.delta * h[i])


# ---------------------------------------------------------------------------
# Seller revenue
# ---------------------------------------------------------------------------


def _second_period_sales(problem: PricingProblem, p_A: float, p_R: float):
    s_accept = survival_table(problem.kernel_accept, np.array([p_A]))[:, 0]
    s_reject = survival_table(problem.kernel_reject, np.array([p_R]))[:, 0]
    return s_accept, s_reject


def evaluate_commitment(p1: float, p_A: float, p_R: float, problem: PricingProblem) -> CommitmentResult:
    """Revenue of a committed triple, with the buyer best-responding type by type."""
    theta = problem.theta1
    gain = acceptance_gain(p1, p_A, p_R, problem)
    accept = gain >= -1e-12 * np.maximum(1.0, np.maximum(np.abs(theta), abs(p1)))
    s_accept, s_reject = _second_period_sales(problem, p_A, p_R)
    m = problem.prior.weights
    delta = problem.delta
    revenue = float(
        np.dot(m, np.where(accept, p1 + delta * p_A * s_accept, delta * p_R * s_reject))
    )
    k_index = int(np.argmax(accept)) if accept.any() else theta.size
    k = float(theta[k_index]) if k_index < theta.size else no_sale_price(problem.prior)
    return CommitmentResult(
        p1=p1,
        p_A=p_A,
        p_R=p_R,
        revenue=revenue,
        k=k,
        all_accept=bool(accept.all()),
        all_reject=not bool(accept.any()),
    )


def static_posting_benchmark(problem: PricingProblem) -> BenchmarkResult:
    """
    Best revenue from posting (p1, p2) in advance.

    With one kernel the periods separate and the answer is pi1* + delta*pi2*.
    When the second-period law depends on the first purchase they do not, and
    the pair is found by searching cutoffs and second-period prices.
    """
    if not problem.complements:
        first = monopoly_price(problem.prior)
        second = monopoly_price(marginal(problem.prior, problem.kernel_accept))
        revenue = first.revenue + problem.delta * second.revenue
        return BenchmarkResult(
            prices=[first.price, second.price],
            revenue=revenue,
            per_period=[first.revenue, second.revenue],
        )
    return _posting_search(problem)


def _posting_search(problem: PricingProblem) -> BenchmarkResult:
    theta = problem.theta1
    m = problem.prior.weights
    delta = problem.delta
    to_points = np.union1d(problem.kernel_accept.to_grid.points, problem.kernel_reject.to_grid.points)
    prices = np.append(to_points, no_sale_price(problem.kernel_accept.to_grid))

    e_accept = partial_expectation_table(problem.kernel_accept, prices)
    e_reject = partial_expectation_table(problem.kernel_reject, prices)
    s_accept = survival_table(problem.kernel_accept, prices)
    s_reject = survival_table(problem.kernel_reject, prices)

    # p1 for cutoff k and price p2: theta_k + delta*(E_A - E_R) at row k
    p1_table = theta[:, None] + delta * (e_accept - e_reject)
    accept_rev = m[:, None] * (delta * prices[None, :] * s_accept)
    reject_rev = m[:, None] * (delta * prices[None, :] * s_reject)
    # tails: rows >= k accept, rows < k reject
    accept_tail = np.cumsum(accept_rev[::-1], axis=0)[::-1]
    reject_head = np.vstack([np.zeros((1, prices.size)), np.cumsum(reject_rev, axis=0)])
    mass_tail = np.cumsum(m[::-1])[::-1]

    values = p1_table * mass_tail[:, None] + accept_tail + reject_head[:-1]
    all_reject = reject_head[-1]
    best_k, best_q = np.unravel_index(int(np.argmax(values)), values.shape)
    best = float(values[best_k, best_q])
    q_none = int(np.argmax(all_reject))
    if all_reject[q_none] > best + TIE_TOL:
        return BenchmarkResult(
            prices=[no_sale_price(problem.prior), float(prices[q_none])],
            revenue=float(all_reject[q_none]),
        )
    return BenchmarkResult(prices=[float(p1_table[best_k, best_q]), float(prices[best_q])], revenue=best)
