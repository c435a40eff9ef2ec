"""
Multi-period threshold equilibria with a commitment option.

Every period the seller either commits to prices for all remaining periods
or posts this period's price only. After a one-period post the continuation
is outcome-equivalent to committing to the posterior monopoly prices, so a
post reduces to a one-shot cutoff game: the buyer compares

    theta_t - p_t + U^A(theta_t)   against   U^R(theta_t)

where U^A, U^R are option values of the committed continuation after each
history. The cutoff rule is the same interval argument as in two periods,
with c = theta + U^A - U^R.
"""

from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from loguru import logger

from ratchet_pricing.config import MASS_TOL, MAX_HORIZON, TIE_TOL
from ratchet_pricing.dist_core import kernel_from_ar1
from ratchet_pricing.domain.distributions import MarkovKernel, TypeGrid
from ratchet_pricing.domain.problem import MultiPeriodProblem, PricingProblem
from ratchet_pricing.domain.results import BenchmarkResult, HistoryNode, MultiPeriodOutcome
from ratchet_pricing.exceptions import (
    AssumptionViolatedError,
    GridMismatchError,
    HorizonLimitError,
    InvalidInputError,
    NoFixedPointError,
)
from ratchet_pricing.pricing import monopoly_price, no_sale_price


def build_kernels(problem: MultiPeriodProblem) -> List[MarkovKernel]:
    """Per-period kernels theta_t -> theta_{t+1}, each on the previous kernel's to-grid."""
    if problem.kernels is not None:
        if len(problem.kernels) != len(problem.steps):
            raise InvalidInputError(
                f"{len(problem.kernels)} kernels given for {len(problem.steps)} AR(1) steps"
            )
        return list(problem.kernels)
    kernels: List[MarkovKernel] = []
    grid = problem.prior
    for spec in problem.steps:
        kernel = kernel_from_ar1(spec, grid, problem.n_theta)
        kernels.append(kernel)
        grid = kernel.to_grid
    return kernels


def two_period_problem(problem: MultiPeriodProblem) -> PricingProblem:
    """The first two periods of a multi-period instance as a baseline problem."""
    kernel = build_kernels(problem)[0]
    return PricingProblem.baseline(problem.prior, kernel, problem.delta, name=problem.name)


class _Chain:
    """Period grids, multi-step transitions and option-value tables."""

    def __init__(self, problem: MultiPeriodProblem):
        self.delta = problem.delta
        self.kernels = build_kernels(problem)
        self.grids: List[TypeGrid] = [problem.prior]
        for t, kernel in enumerate(self.kernels):
            previous = self.grids[-1]
            if kernel.from_grid.size != previous.size or not np.allclose(
                kernel.from_grid.points, previous.points, rtol=0, atol=1e-12
            ):
                raise GridMismatchError(f"kernel {t + 1} does not start on the period-{t + 1} grid")
            self.grids.append(kernel.to_grid)
        self.periods = len(self.grids)

        self.reach: Dict[Tuple[int, int], np.ndarray] = {}
        self.options: Dict[Tuple[int, int], np.ndarray] = {}
        for t in range(self.periods):
            self.reach[(t, t)] = np.eye(self.grids[t].size)
            for s in range(t + 1, self.periods):
                self.reach[(t, s)] = self.reach[(t, s - 1)] @ self.kernels[s - 1].rows
                x = self.grids[s].points
                payoff = np.maximum(x[:, None] - x[None, :], 0.0)
                # last column: the no-sale price
                table = self.reach[(t, s)] @ payoff
                self.options[(t, s)] = np.hstack([table, np.zeros((table.shape[0], 1))])

    def points(self, t: int) -> np.ndarray:
        return self.grids[t].points

    def price_at(self, s: int, index: int) -> float:
        grid = self.grids[s]
        return float(grid.points[index]) if index < grid.size else no_sale_price(grid)

    def laws(self, t: int, weights: np.ndarray) -> List[np.ndarray]:
        return [weights @ self.reach[(t, s)] for s in range(t, self.periods)]


def _monopoly_rows(points: np.ndarray, laws: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Lowest monopoly price index and revenue for every row of laws; index n means no sale."""
    laws = np.atleast_2d(laws)
    survival = np.cumsum(laws[:, ::-1], axis=1)[:, ::-1]
    revenue = np.where(laws > 0, points[None, :] * survival, -np.inf)
    best = revenue.max(axis=1)
    ties = revenue >= (best - TIE_TOL * np.maximum(1.0, np.abs(best)))[:, None]
    index = np.argmax(ties, axis=1)
    no_sale = best < 0
    index = np.where(no_sale, points.size, index)
    return index, np.where(no_sale, 0.0, best)


def _support(weights: np.ndarray) -> Tuple[int, int]:
    positive = np.flatnonzero(weights > MASS_TOL)
    return int(positive[0]), int(positive[-1])


class _Commitment(NamedTuple):
    prices: List[float]
    value: float


def _commit(chain: _Chain, t: int, weights: np.ndarray) -> _Commitment:
    """Commit to each remaining period's monopoly price under the current belief."""
    prices, value = [], 0.0
    for offset, law in enumerate(chain.laws(t, weights)):
        index, revenue = _monopoly_rows(chain.points(t + offset), law)
        prices.append(chain.price_at(t + offset, int(index[0])))
        value += chain.delta**offset * float(revenue[0])
    return _Commitment(prices=prices, value=value)


def _follow(chain: _Chain, t: int, weights: np.ndarray, prices: List[float]) -> float:
    """Seller revenue from t on when the given prices are posted regardless of history."""
    value = 0.0
    for offset, (law, price) in enumerate(zip(chain.laws(t, weights), prices)):
        x = chain.points(t + offset)
        sold = float(law[x >= price - 1e-12 * max(1.0, abs(price))].sum())
        value += chain.delta**offset * price * sold
    return value


class _Posting(NamedTuple):
    """Best one-period post: cutoff, price and the committed continuations it induces."""

    k_index: int
    price: float
    value: float
    prices_accept: List[float]
    prices_reject: List[float]
    u_accept: np.ndarray
    u_reject: np.ndarray


def _post(chain: _Chain, t: int, weights: np.ndarray) -> _Posting:
    x = chain.points(t)
    n = x.size
    delta = chain.delta
    lo_i, hi_i = _support(weights)
    upper_mass = np.append(np.cumsum(weights[::-1])[::-1], 0.0)
    lower_mass = np.concatenate([[0.0], np.cumsum(weights)])

    u_accept = np.zeros((n, n + 1))
    u_reject = np.zeros((n, n + 1))
    v_accept = np.zeros(n + 1)
    v_reject = np.zeros(n + 1)
    a_indices, r_indices = [], []
    for s in range(t + 1, chain.periods):
        reach = chain.reach[(t, s)]
        weighted = weights[:, None] * reach
        upper = np.vstack([np.cumsum(weighted[::-1], axis=0)[::-1], np.zeros((1, reach.shape[1]))])
        lower = np.vstack([np.zeros((1, reach.shape[1])), np.cumsum(weighted, axis=0)])
        on_a = upper_mass > MASS_TOL
        on_r = lower_mass > MASS_TOL
        law_a = np.where(on_a[:, None], upper / np.where(on_a, upper_mass, 1.0)[:, None], reach[hi_i])
        law_r = np.where(on_r[:, None], lower / np.where(on_r, lower_mass, 1.0)[:, None], reach[lo_i])

        a_idx, a_rev = _monopoly_rows(chain.points(s), law_a)
        r_idx, r_rev = _monopoly_rows(chain.points(s), law_r)
        options = chain.options[(t, s)]
        u_accept += delta ** (s - t) * options[:, a_idx]
        u_reject += delta ** (s - t) * options[:, r_idx]
        v_accept += delta ** (s - t - 1) * a_rev
        v_reject += delta ** (s - t - 1) * r_rev
        a_indices.append(a_idx)
        r_indices.append(r_idx)

    c = x[:, None] + u_accept - u_reject
    above = np.arange(n)[:, None] >= np.arange(n + 1)[None, :]
    hi = np.where(above, c, np.inf).min(axis=0)
    lo = np.where(above, -np.inf, c).max(axis=0)
    valid = ~(np.isfinite(hi) & np.isfinite(lo) & (lo >= hi - 1e-12 * np.maximum(1.0, np.abs(hi))))
    if not valid.any():
        raise NoFixedPointError(f"no cutoff is a threshold for any period-{t + 1} price")

    step = max(chain.grids[t].step, 1e-6)
    price = hi.copy()
    price[n] = max(lo[n] + step, no_sale_price(chain.grids[t]))
    value = upper_mass * price + delta * (upper_mass * v_accept + lower_mass * v_reject)
    value = np.where(valid, value, -np.inf)
    top = value.max()
    k = int(np.argmax(value >= top - TIE_TOL * max(1.0, abs(top))))

    offsets = range(t + 1, chain.periods)
    return _Posting(
        k_index=k,
        price=float(price[k]),
        value=float(value[k]),
        prices_accept=[chain.price_at(s, int(idx[k])) for s, idx in zip(offsets, a_indices)],
        prices_reject=[chain.price_at(s, int(idx[k])) for s, idx in zip(offsets, r_indices)],
        u_accept=u_accept[:, k],
        u_reject=u_reject[:, k],
    )


def _continuation_slack(points: np.ndarray, values: np.ndarray) -> float:
    """How far values are from nondecreasing and 1-Lipschitz on points."""
    if values.size < 2:
        return 0.0
    rise = np.diff(values)
    run = np.diff(points)
    return float(max(0.0, -rise.min(), (rise - run).max()))


class _Tree:
    def __init__(self, chain: _Chain, benchmark_prices: List[float]):
        self.chain = chain
        self.benchmark_prices = benchmark_prices
        self.nodes: List[HistoryNode] = []
        self.monotone = True
        self.slack = 0.0

    def _child(self, t: int, weights: np.ndarray, keep: np.ndarray, fallback: int) -> Tuple[np.ndarray, float]:
        kept = np.where(keep, weights, 0.0)
        share = float(kept.sum())
        if share > MASS_TOL:
            belief = kept / share
        else:
            belief = np.zeros_like(weights)
            belief[fallback] = 1.0
            share = 0.0
        return belief @ self.chain.kernels[t].rows, share

    def expand(
        self,
        history: str,
        t: int,
        weights: np.ndarray,
        mass: float,
        plan: Optional[List[float]],
        commit_option: bool,
    ) -> float:
        chain = self.chain
        x = chain.points(t)
        last = t == chain.periods - 1
        commitment = _commit(chain, t, weights)
        posting = None if last else _post(chain, t, weights)

        if posting is not None:
            if any(a < r - 1e-12 * max(1.0, abs(a)) for a, r in zip(posting.prices_accept, posting.prices_reject)):
                self.monotone = False
                logger.warning(f"history '{history}': accept-side price below reject-side price")
            self.slack = max(
                self.slack,
                _continuation_slack(x, posting.u_accept),
                _continuation_slack(x, posting.u_reject),
            )

        if plan is None and posting is not None and not commit_option:
            commits = False
        elif plan is None and posting is not None:
            tol = TIE_TOL * max(1.0, abs(posting.value))
            commits = commitment.value >= posting.value - tol
        else:
            commits = True

        if plan is None and commits:
            plan = commitment.prices

        if commits:
            price = plan[0]
            value = _follow(chain, t, weights, plan)
            accept = x >= price - 1e-12 * max(1.0, abs(price))
            threshold = price
            plan_a = plan_r = plan[1:]
        else:
            price = posting.price
            value = posting.value
            accept = np.arange(x.size) >= posting.k_index
            threshold = float(x[posting.k_index]) if posting.k_index < x.size else no_sale_price(chain.grids[t])
            plan_a, plan_r = posting.prices_accept, posting.prices_reject

        self.nodes.append(
            HistoryNode(
                history=history,
                period=t + 1,
                price=float(price),
                commit=commits,
                k=float(threshold),
                mass=float(mass),
                belief_mean=float(np.dot(weights, x)),
                value=float(value),
                commit_value=commitment.value,
                equivalence_gap=float(value - _follow(chain, t, weights, self.benchmark_prices[t:])),
                set_value=posting.value if posting else None,
                set_k=float(x[posting.k_index]) if posting and posting.k_index < x.size else None,
                set_price=posting.price if posting else None,
                set_prices_accept=posting.prices_accept if posting else [],
                set_prices_reject=posting.prices_reject if posting else [],
                u_accept=posting.u_accept.tolist() if posting else [],
                u_reject=posting.u_reject.tolist() if posting else [],
            )
        )
        if not last:
            lo_i, hi_i = _support(weights)
            belief_a, share_a = self._child(t, weights, accept, hi_i)
            belief_r, share_r = self._child(t, weights, ~accept, lo_i)
            self.expand(history + "A", t + 1, belief_a, mass * share_a, plan_a, commit_option)
            self.expand(history + "R", t + 1, belief_r, mass * share_r, plan_r, commit_option)
        return value


def multi_period_benchmark(problem: MultiPeriodProblem) -> BenchmarkResult:
    """Post each period's marginal monopoly price in advance."""
    chain = _Chain(problem)
    prices, per_period = [], []
    for t, law in enumerate(chain.laws(0, problem.prior.weights)):
        result = monopoly_price(chain.grids[t].with_weights(law))
        prices.append(result.price)
        per_period.append(result.revenue)
    revenue = sum(problem.delta**t * r for t, r in enumerate(per_period))
    return BenchmarkResult(prices=prices, revenue=float(revenue), per_period=per_period)


def solve_multi_period(
    problem: MultiPeriodProblem,
    commit_option: bool = True,
    check: bool = True,
) -> MultiPeriodOutcome:
    """
    Seller-optimal threshold equilibrium over the full public-history tree.

    With the commit option the root compares committing to the marginal
    monopoly prices with its best one-period post; without it only two
    periods are solved.
    """
    if problem.periods > MAX_HORIZON:
        raise HorizonLimitError(f"{problem.periods} periods exceeds the limit of {MAX_HORIZON}")
    if not commit_option and problem.periods > 2:
        raise NoFixedPointError(
            "without the commit option pure threshold equilibria are only solved for two periods"
        )
    if check:
        from ratchet_pricing.assumptions import check_ar1_chain, failing, summarize

        reports = check_ar1_chain(problem.prior, problem.steps, problem.delta)
        if failing(reports):
            message = f"AR(1) chain fails the multi-period assumptions: {summarize(reports)}"
            logger.error(message)
            raise AssumptionViolatedError(message, reports)

    chain = _Chain(problem)
    benchmark = multi_period_benchmark(problem)
    tree = _Tree(chain, benchmark.prices)
    revenue = tree.expand("", 0, problem.prior.weights, 1.0, None, commit_option)
    nodes = sorted(tree.nodes, key=lambda node: (node.period, node.history))

    outcome = MultiPeriodOutcome(
        periods=chain.periods,
        revenue=revenue,
        benchmark=benchmark.revenue,
        monopoly_prices=benchmark.prices,
        equivalence_gap=revenue - benchmark.revenue,
        nodes=nodes,
        prices_monotone=tree.monotone,
        continuation_slack=tree.slack,
        commit_option=commit_option,
    )
    logger.info(
        f"{chain.periods}-period solve: revenue={revenue:.6f}, benchmark={benchmark.revenue:.6f}, "
        f"root {'commits' if nodes[0].commit else 'posts'} at {nodes[0].price:.6g}"
    )
    return outcome
