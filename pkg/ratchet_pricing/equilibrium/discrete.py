"""
Exhaustive pure-strategy equilibrium enumeration for small finite games.

Every seller plan (p1, p_A, p_R) on the game's price grid is paired with the
buyer's first-period responses it allows and then filtered:

- buyer: each type plays a best response; indifferent types accept, or may
  go either way under TieRule.EITHER
- second-period seller: the price is a monopoly price against the Bayes
  posterior on path; off path the belief is the lowest (after rejection) or
  highest (after acceptance) supported type under PBE-star, or any belief a
  linear program can find under BeliefRule.UNRESTRICTED
- first-period seller: no deviation p1' can be worth more than the worst
  continuation equilibrium that follows it
"""

import itertools
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import linprog

from ratchet_pricing.config import ENUM_MAX_PRICES, ENUM_MAX_TYPES, MASS_TOL, TIE_TOL
from ratchet_pricing.dist_core import kernel_from_table, make_discrete
from ratchet_pricing.domain.games import BeliefRule, DiscreteGame, TieRule
from ratchet_pricing.domain.problem import PricingProblem
from ratchet_pricing.domain.results import BeliefSummary, BenchmarkResult, EquilibriumOutcome
from ratchet_pricing.exceptions import InvalidInputError, SizeLimitExceededError


def _tol(value: float) -> float:
    return TIE_TOL * max(1.0, abs(value))


class _Tables:
    """Per-type second-period revenue and option value at every grid price."""

    def __init__(self, game: DiscreteGame):
        self.prices = np.asarray(game.prices, dtype=float)
        self.theta1 = np.asarray(game.theta1, dtype=float)
        self.theta2 = np.asarray(game.theta2, dtype=float)
        self.mass = game.first_period_mass()
        self.delta = game.delta
        cond = game.conditional_table()
        values = {
            "A": self.theta2[None, :] + game.kappa_table(),
            "R": np.broadcast_to(self.theta2[None, :], cond.shape),
        }
        self.revenue: Dict[str, np.ndarray] = {}
        self.option: Dict[str, np.ndarray] = {}
        self.values = values
        self.cond = cond
        for history, v in values.items():
            tol = 1e-12 * np.maximum(1.0, np.abs(self.prices))
            buys = v[:, :, None] >= (self.prices - tol)[None, None, :]
            self.revenue[history] = self.prices[None, :] * np.einsum("ij,ijq->iq", cond, buys)
            self.option[history] = np.einsum(
                "ij,ijq->iq", cond, np.maximum(v[:, :, None] - self.prices[None, None, :], 0.0)
            )
        positive = np.flatnonzero(self.mass > MASS_TOL)
        self.lowest, self.highest = int(positive[0]), int(positive[-1])
        self._feasible: Dict[Tuple[str, int], bool] = {}

    def rational(self, history: str, belief: np.ndarray, q: int) -> bool:
        expected = belief @ self.revenue[history]
        return bool(expected[q] >= expected.max() - _tol(expected.max()))

    def belief_exists(self, history: str, q: int) -> bool:
        """Whether some belief over first-period types makes price q optimal."""
        key = (history, q)
        if key not in self._feasible:
            rev = self.revenue[history]
            n = rev.shape[0]
            res = linprog(
                c=np.zeros(n),
                A_ub=(rev - rev[:, [q]]).T,
                b_ub=np.full(rev.shape[1], 1e-12),
                A_eq=np.ones((1, n)),
                b_eq=np.array([1.0]),
                bounds=[(0.0, None)] * n,
                method="highs",
            )
            self._feasible[key] = res.status == 0
        return self._feasible[key]

    def point(self, index: int) -> np.ndarray:
        belief = np.zeros(self.mass.size)
        belief[index] = 1.0
        return belief


def _check_size(game: DiscreteGame) -> None:
    if max(len(game.theta1), len(game.theta2)) > ENUM_MAX_TYPES:
        raise SizeLimitExceededError(
            f"game has {len(game.theta1)} x {len(game.theta2)} types, limit is {ENUM_MAX_TYPES} per period"
        )
    if len(game.prices) > ENUM_MAX_PRICES:
        raise SizeLimitExceededError(f"game has {len(game.prices)} prices, limit is {ENUM_MAX_PRICES}")


def _responses(gain: np.ndarray, tie_rule: TieRule):
    tol = 1e-12 * np.maximum(1.0, np.abs(gain))
    base = gain >= -tol
    if tie_rule == TieRule.ACCEPT:
        yield base
        return
    ties = np.flatnonzero(np.abs(gain) <= tol)
    for flips in itertools.product([True, False], repeat=ties.size):
        profile = base.copy()
        profile[ties] = flips
        yield profile


def _second_period_ok(
    tables: _Tables, history: str, members: np.ndarray, q: int, belief_rule: BeliefRule
) -> Tuple[bool, str]:
    weights = np.where(members, tables.mass, 0.0)
    total = weights.sum()
    if total > MASS_TOL:
        return tables.rational(history, weights / total, q), "posterior"
    if belief_rule == BeliefRule.PBE_STAR:
        index = tables.highest if history == "A" else tables.lowest
        return tables.rational(history, tables.point(index), q), "point"
    return tables.belief_exists(history, q), "unrestricted"


def _belief_summary(tables: _Tables, history: str, members: np.ndarray, kind: str) -> BeliefSummary:
    weights = np.where(members, tables.mass, 0.0)
    total = float(weights.sum())
    if total > MASS_TOL:
        mix = weights / total
    elif kind == "point":
        mix = tables.point(tables.highest if history == "A" else tables.lowest)
    else:
        mix = np.full(tables.mass.size, 1.0 / tables.mass.size)
    v = tables.values[history]
    support = v[(mix[:, None] * tables.cond) > MASS_TOL]
    return BeliefSummary(
        history=history,
        kind=kind,
        mass=total,
        mean=float(np.sum(mix[:, None] * tables.cond * v)),
        lo=float(support.min()) if support.size else 0.0,
        hi=float(support.max()) if support.size else 0.0,
    )


def enumerate_discrete(
    game: DiscreteGame,
    tie_rule: TieRule = TieRule.ACCEPT,
    belief_rule: BeliefRule = BeliefRule.PBE_STAR,
) -> List[EquilibriumOutcome]:
    """All pure-strategy equilibria of the game, highest revenue first."""
    _check_size(game)
    tables = _Tables(game)
    prices, m, delta = tables.prices, tables.mass, tables.delta
    logger.info(
        f"Enumerating {game.name or 'game'}: {len(game.theta1)} types, {prices.size} prices, "
        f"ties={TieRule(tie_rule).value}, beliefs={BeliefRule(belief_rule).value}"
    )

    continuation: Dict[int, list] = {}
    for i1, p1 in enumerate(prices):
        found = []
        for a, r in itertools.product(range(prices.size), repeat=2):
            u_accept = tables.theta1 - p1 + delta * tables.option["A"][:, a]
            u_reject = delta * tables.option["R"][:, r]
            gain = u_accept - u_reject
            for accept in _responses(gain, tie_rule):
                ok_a, kind_a = _second_period_ok(tables, "A", accept, a, belief_rule)
                if not ok_a:
                    continue
                ok_r, kind_r = _second_period_ok(tables, "R", ~accept, r, belief_rule)
                if not ok_r:
                    continue
                revenue = float(
                    np.dot(
                        m,
                        np.where(
                            accept,
                            p1 + delta * tables.revenue["A"][:, a],
                            delta * tables.revenue["R"][:, r],
                        ),
                    )
                )
                found.append((revenue, a, r, accept, kind_a, kind_r, gain))
        continuation[i1] = found

    worst = {i1: min(f[0] for f in found) for i1, found in continuation.items() if found}
    silent = [float(prices[i1]) for i1, found in continuation.items() if not found]
    if silent:
        logger.debug(f"no pure continuation after p1 in {silent}")

    survivors: List[Tuple[tuple, EquilibriumOutcome]] = []
    for i1, found in continuation.items():
        deviation = max((w for j, w in worst.items() if j != i1), default=-np.inf)
        for revenue, a, r, accept, kind_a, kind_r, gain in found:
            if revenue < deviation - _tol(deviation):
                continue
            outcome = _outcome(tables, prices[i1], a, r, accept, kind_a, kind_r, gain, revenue, belief_rule)
            survivors.append(((-revenue, i1, a, r, tuple(~accept)), outcome))

    survivors.sort(key=lambda s: s[0])
    logger.info(f"{len(survivors)} equilibria survive")
    return [s[1] for s in survivors]


def _outcome(
    tables: _Tables,
    p1: float,
    a: int,
    r: int,
    accept: np.ndarray,
    kind_a: str,
    kind_r: str,
    gain: np.ndarray,
    revenue: float,
    belief_rule: BeliefRule,
) -> EquilibriumOutcome:
    delta = tables.delta
    accepting = np.flatnonzero(accept)
    k = float(tables.theta1[accepting[0]]) if accepting.size else float(tables.prices.max()) + 1.0
    u_accept = tables.theta1 - p1 + delta * tables.option["A"][:, a]
    u_reject = delta * tables.option["R"][:, r]
    tol = 1e-12 * np.maximum(1.0, np.abs(gain))
    return EquilibriumOutcome(
        p1=float(p1),
        k=k,
        p_A=float(tables.prices[a]),
        p_R=float(tables.prices[r]),
        revenue=revenue,
        buyer_value=np.where(accept, u_accept, u_reject).tolist(),
        beliefs=[
            _belief_summary(tables, "A", accept, kind_a),
            _belief_summary(tables, "R", ~accept, kind_r),
        ],
        refinement="pbe-star" if belief_rule == BeliefRule.PBE_STAR else "unrestricted",
        acceptance=accept.tolist(),
        tie_sensitive=bool(np.any(np.abs(gain) <= tol)),
    )


def find_profile(
    outcomes: List[EquilibriumOutcome], p1: float, p_A: float, p_R: float, tol: float = 1e-9
) -> List[EquilibriumOutcome]:
    """Equilibria playing the given seller plan."""
    return [
        o for o in outcomes if abs(o.p1 - p1) <= tol and abs(o.p_A - p_A) <= tol and abs(o.p_R - p_R) <= tol
    ]


def discrete_posting_benchmark(game: DiscreteGame) -> BenchmarkResult:
    """Best revenue from announcing (p1, p2) up front, buyer best-responding type by type."""
    _check_size(game)
    tables = _Tables(game)
    prices, m, delta = tables.prices, tables.mass, tables.delta
    best: Optional[Tuple[float, int, int]] = None
    for i1, q in itertools.product(range(prices.size), repeat=2):
        gain = tables.theta1 - prices[i1] + delta * (tables.option["A"][:, q] - tables.option["R"][:, q])
        accept = gain >= -1e-12 * np.maximum(1.0, np.abs(gain))
        revenue = float(
            np.dot(
                m,
                np.where(
                    accept,
                    prices[i1] + delta * tables.revenue["A"][:, q],
                    delta * tables.revenue["R"][:, q],
                ),
            )
        )
        if best is None or revenue > best[0] + _tol(best[0]):
            best = (revenue, i1, q)
    revenue, i1, q = best
    return BenchmarkResult(prices=[float(prices[i1]), float(prices[q])], revenue=revenue)


# ---------------------------------------------------------------------------
# Conversions between finite games and pricing problems
# ---------------------------------------------------------------------------


def problem_from_game(game: DiscreteGame) -> PricingProblem:
    """The same instance as a PricingProblem; kappa moves the post-purchase kernel's support."""
    prior = make_discrete(game.theta1, game.first_period_mass())
    cond = game.conditional_table()
    reject = kernel_from_table(prior, game.theta2, cond, x1_tag=0)
    kappa = game.kappa_table()
    if not np.any(kappa):
        return PricingProblem.baseline(prior, reject, game.delta, name=game.name)
    shifted = np.asarray(game.theta2)[None, :] + kappa
    to_points = np.unique(shifted)
    rows = np.zeros((cond.shape[0], to_points.size))
    for i in range(cond.shape[0]):
        np.add.at(rows[i], np.searchsorted(to_points, shifted[i]), cond[i])
    accept = kernel_from_table(prior, to_points, rows, x1_tag=1)
    return PricingProblem(
        prior=prior, kernel_accept=accept, kernel_reject=reject, delta=game.delta, name=game.name
    )


def game_from_problem(problem: PricingProblem, prices: Optional[List[float]] = None) -> DiscreteGame:
    """A small baseline problem as a finite game (prices default to the type values)."""
    if problem.complements:
        raise InvalidInputError("only single-kernel problems convert to a finite game")
    kernel = problem.kernel_accept
    return DiscreteGame(
        name=problem.name,
        theta1=problem.prior.points.tolist(),
        theta2=kernel.to_grid.points.tolist(),
        marginal=problem.prior.weights.tolist(),
        transition=kernel.rows.tolist(),
        prices=prices or [],
        delta=problem.delta,
    )
