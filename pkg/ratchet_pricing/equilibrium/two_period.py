"""
Two-period PBE-star via the auxiliary one-shot game.

For a first-period price p1 the buyer picks a cutoff k and the two
second-period sellers pick monopoly prices against the posteriors the cutoff
induces. A continuation (k, p_A, p_R) is a fixed point when the prices make
k the buyer's threshold. Buyer gain is theta1 - p1 - delta*h(theta1), so for
fixed prices k is the threshold exactly on an interval of first-period prices

    max_{i<k} c_i < p1 <= min_{i>=k} c_i,   c_i = theta1_i - delta*h_i

and the seller's value G = mass(k)*p1 + second-period revenue is increasing
in p1 there. The seller-optimal equilibrium therefore posts the top of one of
these intervals, which makes the search exact rather than grid-bound.
"""

import concurrent.futures
import itertools
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ratchet_pricing.config import MASS_TOL, N_PRICE, THREADS, TIE_TOL
from ratchet_pricing.dist_core import Condition, partial_expectation_table, posterior, survival_table
from ratchet_pricing.domain.distributions import TypeGrid
from ratchet_pricing.domain.problem import PricingProblem
from ratchet_pricing.domain.results import BeliefSummary, EquilibriumOutcome, FixedPoint, SellerValuePoint
from ratchet_pricing.exceptions import AssumptionViolatedError, NoFixedPointError
from ratchet_pricing.pricing import acceptance_gain, h_function, monopoly_prices, no_sale_price


class Continuation(NamedTuple):
    """One fixed-point candidate and the first-period prices that support it."""

    k_index: int
    p_A: float
    p_R: float
    lo: float
    hi: float
    mass: float
    second_period: float
    kind_A: str
    kind_R: str
    tied: bool = False

    def supports(self, p1: float) -> bool:
        tol = 1e-12 * max(1.0, abs(p1))
        return self.lo + tol < p1 <= self.hi + tol

    def value(self, p1: float) -> float:
        return self.mass * p1 + self.second_period


def support_bounds(grid: TypeGrid) -> Tuple[int, int]:
    """Indices of the lowest and highest points carrying mass."""
    positive = np.flatnonzero(grid.weights > MASS_TOL)
    return int(positive[0]), int(positive[-1])


def cutoff_posteriors(problem: PricingProblem, k_index: int) -> Tuple[TypeGrid, str, TypeGrid, str]:
    """
    Second-period beliefs after acceptance and rejection for cutoff index k.

    A history with no mass behind it is off path: rejection is then read as
    the lowest supported type, acceptance as the highest.
    """
    prior = problem.prior
    n = prior.size
    m = prior.weights
    lo_i, hi_i = support_bounds(prior)
    k = float(prior.points[k_index]) if k_index < n else no_sale_price(prior)
    if m[k_index:].sum() > MASS_TOL:
        post_a, kind_a = posterior(problem.kernel_accept, prior, Condition.GEQ, k), "posterior"
    else:
        post_a, kind_a = problem.kernel_accept.row(hi_i), "point"
    if m[:k_index].sum() > MASS_TOL:
        post_r, kind_r = posterior(problem.kernel_reject, prior, Condition.LT, k), "posterior"
    else:
        post_r, kind_r = problem.kernel_reject.row(lo_i), "point"
    return post_a, kind_a, post_r, kind_r


def _continuations_for(problem: PricingProblem, ks: Sequence[int]) -> List[Continuation]:
    theta = problem.theta1
    m = problem.prior.weights
    delta = problem.delta
    n = theta.size
    out: List[Continuation] = []
    for k in ks:
        post_a, kind_a, post_r, kind_r = cutoff_posteriors(problem, k)
        ties_a, ties_r = monopoly_prices(post_a), monopoly_prices(post_r)
        tied = len(ties_a) > 1 or len(ties_r) > 1
        # each pair of tied monopoly prices is its own continuation
        for p_A, p_R in itertools.product(ties_a, ties_r):
            c = theta - delta * h_function(problem.kernel_accept, problem.kernel_reject, p_A, p_R)
            hi = float(c[k:].min()) if k < n else np.inf
            lo = float(c[:k].max()) if k > 0 else -np.inf
            if np.isfinite(hi) and np.isfinite(lo) and lo >= hi - 1e-12 * max(1.0, abs(hi)):
                continue
            s_a = survival_table(problem.kernel_accept, np.array([p_A]))[:, 0]
            s_r = survival_table(problem.kernel_reject, np.array([p_R]))[:, 0]
            second = delta * (p_A * float(np.dot(m[k:], s_a[k:])) + p_R * float(np.dot(m[:k], s_r[:k])))
            out.append(
                Continuation(
                    k_index=int(k),
                    p_A=float(p_A),
                    p_R=float(p_R),
                    lo=lo,
                    hi=hi,
                    mass=float(m[k:].sum()),
                    second_period=second,
                    kind_A=kind_a,
                    kind_R=kind_r,
                    tied=tied,
                )
            )
    return out


def continuations(problem: PricingProblem, threads: int = THREADS) -> List[Continuation]:
    """Every (k, p_A, p_R) that is a fixed point for some first-period price."""
    chunks = [c for c in np.array_split(np.arange(problem.prior.size + 1), max(1, threads)) if c.size]
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        parts = list(executor.map(lambda ks: _continuations_for(problem, ks), chunks))
    found = [c for part in parts for c in part]
    logger.debug(f"{len(found)} continuation candidates over {problem.prior.size + 1} cutoffs")
    return found


def continuation_fixed_points(
    p1: float,
    problem: PricingProblem,
    candidates: Optional[List[Continuation]] = None,
) -> List[FixedPoint]:
    """Continuation equilibria after first-period price p1, best for the seller first."""
    candidates = candidates if candidates is not None else continuations(problem)
    n = problem.prior.size
    points = [
        FixedPoint(
            k=float(problem.theta1[c.k_index]) if c.k_index < n else no_sale_price(problem.prior),
            k_index=c.k_index,
            p_A=c.p_A,
            p_R=c.p_R,
            seller_value=c.value(p1),
        )
        for c in candidates
        if c.supports(p1)
    ]
    if not points:
        logger.warning(f"no continuation fixed point at p1={p1:.6g}")
    points.sort(key=lambda f: (-f.seller_value, f.k_index, f.p_A, f.p_R))
    return points


def _price_range(problem: PricingProblem, candidates: List[Continuation], n_price: int) -> np.ndarray:
    kinks = [v for c in candidates for v in (c.lo, c.hi) if np.isfinite(v)]
    lo = min(kinks) if kinks else problem.prior.lo
    hi = max(kinks) if kinks else problem.prior.hi
    step = max(problem.prior.step, (hi - lo) / max(n_price - 1, 1))
    return np.linspace(lo, hi + step, n_price)


def seller_value_curve(
    problem: PricingProblem,
    p1_grid: Optional[Sequence[float]] = None,
    n_price: int = N_PRICE,
) -> List[SellerValuePoint]:
    """H(p1): best continuation value at each first-period price, with the number of fixed points."""
    candidates = continuations(problem)
    grid = np.asarray(p1_grid, dtype=float) if p1_grid is not None else _price_range(problem, candidates, n_price)
    curve = []
    for p1 in grid:
        values = [c.value(float(p1)) for c in candidates if c.supports(float(p1))]
        curve.append(
            SellerValuePoint(p1=float(p1), value=max(values) if values else None, n_fixed_points=len(values))
        )
    return curve


def _all_reject_price(problem: PricingProblem, c: Continuation) -> float:
    return max(c.lo + max(problem.prior.step, 1e-6), no_sale_price(problem.prior))


def solve_pbe_star(
    problem: PricingProblem,
    p1_grid: Optional[Sequence[float]] = None,
    strict: bool = False,
    n_price: int = N_PRICE,
    threads: int = THREADS,
) -> EquilibriumOutcome:
    """
    Seller-optimal PBE-star of the two-period game.

    Without p1_grid the first-period price is unrestricted and the optimum
    sits at an interval top; with p1_grid the seller is confined to it.
    """
    from ratchet_pricing.assumptions import check_problem, failing, summarize

    reports = check_problem(problem)
    if failing(reports):
        message = f"instance fails the threshold assumptions: {summarize(reports)}"
        if strict:
            logger.error(message)
            raise AssumptionViolatedError(message, reports)
        logger.warning(message)

    candidates = continuations(problem, threads=threads)
    if p1_grid is None:
        offers = [
            (c.hi if c.k_index < problem.prior.size else _all_reject_price(problem, c), c) for c in candidates
        ]
        diagnostic = _price_range(problem, candidates, n_price)
    else:
        diagnostic = np.asarray(p1_grid, dtype=float)
        offers = [(float(p1), c) for p1 in diagnostic for c in candidates if c.supports(float(p1))]

    missing = [float(p1) for p1 in diagnostic if not any(c.supports(float(p1)) for c in candidates)]
    if not offers:
        logger.error("no first-period price admits a continuation equilibrium")
        raise NoFixedPointError("no first-period price admits a continuation equilibrium", missing)
    if missing:
        logger.warning(f"{len(missing)} first-period prices have no pure continuation equilibrium")

    def key(offer):
        p1, c = offer
        return (c.k_index, c.p_A, c.p_R, p1)

    best_p1, best = offers[0]
    for p1, c in offers[1:]:
        v, top = c.value(p1), best.value(best_p1)
        tol = TIE_TOL * max(1.0, abs(top))
        if v > top + tol or (v >= top - tol and key((p1, c)) < key((best_p1, best))):
            best_p1, best = p1, c

    top = best.value(best_p1)
    rivals = {
        (c.k_index, c.p_A, c.p_R)
        for p1, c in offers
        if c.value(p1) >= top - TIE_TOL * max(1.0, abs(top))
    }
    tie_sensitive = len(rivals) > 1 or best.tied
    if len(rivals) > 1:
        logger.warning(f"{len(rivals)} continuations tie at the seller optimum {top:.6f}")
    if best.tied:
        logger.warning(
            f"a second-period posterior has several monopoly prices; chose p_A={best.p_A:.6g}, p_R={best.p_R:.6g}"
        )

    outcome = build_outcome(problem, best_p1, best, missing, tie_sensitive)
    logger.info(
        f"PBE-star: p1={outcome.p1:.6g}, k={outcome.k:.6g}, p_A={outcome.p_A:.6g}, "
        f"p_R={outcome.p_R:.6g}, revenue={outcome.revenue:.6f}"
    )
    return outcome


def build_outcome(
    problem: PricingProblem,
    p1: float,
    c: Continuation,
    missing: Optional[List[float]] = None,
    tie_sensitive: bool = False,
) -> EquilibriumOutcome:
    theta = problem.theta1
    n = theta.size
    delta = problem.delta
    gain = acceptance_gain(p1, c.p_A, c.p_R, problem)
    accept = gain >= -1e-12 * np.maximum(1.0, np.maximum(np.abs(theta), abs(p1)))
    e_a = partial_expectation_table(problem.kernel_accept, np.array([c.p_A]))[:, 0]
    e_r = partial_expectation_table(problem.kernel_reject, np.array([c.p_R]))[:, 0]
    buyer_value = np.maximum(theta - p1 + delta * e_a, delta * e_r)

    post_a, kind_a, post_r, kind_r = cutoff_posteriors(problem, c.k_index)
    beliefs = [
        _belief("A", kind_a, c.mass, post_a),
        _belief("R", kind_r, 1.0 - c.mass, post_r),
    ]
    return EquilibriumOutcome(
        p1=float(p1),
        k=float(theta[c.k_index]) if c.k_index < n else no_sale_price(problem.prior),
        p_A=c.p_A,
        p_R=c.p_R,
        revenue=c.value(p1),
        buyer_value=buyer_value.tolist(),
        beliefs=beliefs,
        acceptance=accept.tolist(),
        tie_sensitive=tie_sensitive,
        no_fixed_point_prices=missing or [],
    )


def _belief(history: str, kind: str, mass: float, grid: TypeGrid) -> BeliefSummary:
    support = grid.points[grid.weights > MASS_TOL]
    return BeliefSummary(
        history=history,
        kind=kind,
        mass=float(mass),
        mean=grid.mean(),
        lo=float(support[0]),
        hi=float(support[-1]),
    )
