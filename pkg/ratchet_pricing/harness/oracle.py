"""
Brute-force oracles for cross-checking the solvers.

Each query scans every candidate directly and touches only the distribution
primitives, so an agreement with a solver is an independent confirmation.
"""

from enum import Enum
from typing import Dict, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from ratchet_pricing.config import ORACLE_BUDGET, TIE_TOL
from ratchet_pricing.dist_core import marginal, partial_expectation, partial_expectation_table, survival_table
from ratchet_pricing.domain.distributions import TypeGrid
from ratchet_pricing.domain.problem import PricingProblem
from ratchet_pricing.exceptions import BudgetExceededError, GridMismatchError, InvalidInputError


class OracleQuery(str, Enum):
    MONOPOLY = "monopoly"
    BENCHMARK = "benchmark"
    THRESHOLD = "threshold"
    RELAXATION = "relaxation"


class OracleResult(BaseModel):
    query: OracleQuery
    value: float
    evaluations: int
    argmax: Dict[str, float] = Field(default_factory=dict)


def _spend(evaluations: int, budget: int) -> int:
    if evaluations > budget:
        logger.error(f"oracle query needs {evaluations} evaluations, budget is {budget}")
        raise BudgetExceededError(f"{evaluations} evaluations exceed the oracle budget of {budget}")
    return evaluations


def _scan_monopoly(grid: TypeGrid):
    best_price, best_revenue = None, -np.inf
    for price in grid.points:
        revenue = float(price) * grid.survival(float(price))
        if revenue > best_revenue + TIE_TOL * max(1.0, abs(best_revenue)):
            best_price, best_revenue = float(price), revenue
    return best_price, best_revenue


def _monopoly(problem: PricingProblem, budget: int) -> OracleResult:
    grid = problem.prior
    spent = _spend(grid.size, budget)
    price, revenue = _scan_monopoly(grid)
    return OracleResult(query=OracleQuery.MONOPOLY, value=revenue, evaluations=spent, argmax={"price": price})


def _benchmark(problem: PricingProblem, budget: int) -> OracleResult:
    if problem.complements:
        raise InvalidInputError("the benchmark oracle covers single-kernel problems only")
    second = marginal(problem.prior, problem.kernel_accept)
    spent = _spend(problem.prior.size + second.size, budget)
    p1, r1 = _scan_monopoly(problem.prior)
    p2, r2 = _scan_monopoly(second)
    return OracleResult(
        query=OracleQuery.BENCHMARK,
        value=r1 + problem.delta * r2,
        evaluations=spent,
        argmax={"p1": p1, "p2": p2},
    )


def _threshold(problem: PricingProblem, p1: float, p_A: float, p_R: float, budget: int) -> OracleResult:
    n = problem.prior.size
    spent = _spend(n * (problem.kernel_accept.to_grid.size + problem.kernel_reject.to_grid.size), budget)
    delta = problem.delta
    k = None
    for i, theta in enumerate(problem.theta1):
        accept_value = theta - p1 + delta * partial_expectation(problem.kernel_accept.row(i), p_A)
        reject_value = delta * partial_expectation(problem.kernel_reject.row(i), p_R)
        if accept_value >= reject_value - 1e-12 * max(1.0, abs(theta), abs(p1)):
            k = float(theta)
            break
    return OracleResult(
        query=OracleQuery.THRESHOLD,
        value=k if k is not None else float("inf"),
        evaluations=spent,
        argmax={"p1": p1, "p_A": p_A, "p_R": p_R},
    )


def _relaxation(problem: PricingProblem, budget: int) -> OracleResult:
    """
    Best (k, p_A >= p_R) when p1 makes type k exactly indifferent.

    Revenue of that mechanism equals the relaxation objective, so the scan
    checks the virtual-value tables from the primal side.
    """
    to_a, to_r = problem.kernel_accept.to_grid, problem.kernel_reject.to_grid
    if to_a.size != to_r.size or not np.allclose(to_a.points, to_r.points, rtol=0, atol=1e-12):
        raise GridMismatchError("the relaxation oracle needs a common theta2 grid")
    theta = problem.theta1
    m = problem.prior.weights
    n = theta.size
    delta = problem.delta
    prices = np.append(to_a.points, to_a.hi + max(to_a.step, 1.0))
    spent = _spend((n + 1) * prices.size * prices.size, budget)

    option_a = partial_expectation_table(problem.kernel_accept, prices)
    option_r = partial_expectation_table(problem.kernel_reject, prices)
    sales_a = m[:, None] * prices[None, :] * survival_table(problem.kernel_accept, prices)
    sales_r = m[:, None] * prices[None, :] * survival_table(problem.kernel_reject, prices)
    ordered = prices[:, None] >= prices[None, :]

    best_value, best = -np.inf, (n, 0, 0)
    for k in range(n + 1):
        mass = float(m[k:].sum())
        accept_rev = delta * sales_a[k:].sum(axis=0)
        reject_rev = delta * sales_r[:k].sum(axis=0)
        if k < n:
            # p1 = theta_k - delta*(E_R - E_A) at row k
            accept_rev = accept_rev + mass * (theta[k] + delta * option_a[k])
            reject_rev = reject_rev - mass * delta * option_r[k]
        table = np.where(ordered, accept_rev[:, None] + reject_rev[None, :], -np.inf)
        top = float(table.max())
        if top > best_value + TIE_TOL * max(1.0, abs(best_value)):
            a, r = np.unravel_index(int(np.argmax(table)), table.shape)
            best_value, best = top, (k, int(a), int(r))

    k, a, r = best
    return OracleResult(
        query=OracleQuery.RELAXATION,
        value=best_value,
        evaluations=spent,
        argmax={
            "k": float(theta[k]) if k < n else float("inf"),
            "p_A": float(prices[a]),
            "p_R": float(prices[r]),
        },
    )


def oracle_bruteforce(
    problem: PricingProblem,
    query: OracleQuery,
    p1: Optional[float] = None,
    p_A: Optional[float] = None,
    p_R: Optional[float] = None,
    budget: int = ORACLE_BUDGET,
) -> OracleResult:
    """Answer one query by direct enumeration, refusing instances over budget."""
    query = OracleQuery(query)
    logger.info(f"Oracle '{query.value}' on {problem.name or 'problem'} ({problem.prior.size} types)")
    if query == OracleQuery.MONOPOLY:
        return _monopoly(problem, budget)
    if query == OracleQuery.BENCHMARK:
        return _benchmark(problem, budget)
    if query == OracleQuery.THRESHOLD:
        if p1 is None or p_A is None or p_R is None:
            raise InvalidInputError("the threshold oracle needs p1, p_A and p_R")
        return _threshold(problem, p1, p_A, p_R, budget)
    return _relaxation(problem, budget)
