"""
Reproduction targets: each id runs a pipeline on a bundled scenario and
compares the numbers against the expected ones.
"""

from typing import Callable, Dict, List, Optional

import pandas as pd
from loguru import logger
from pydantic import BaseModel, Field

from ratchet_pricing.config import THREADS
from ratchet_pricing.exceptions import InvalidInputError, ReproductionAssertionError
from ratchet_pricing.harness.registry import REPRODUCTIONS, bundled, bundled_sweep
from ratchet_pricing.harness.scenarios import Scenario, build_game, build_problem

# last commitment gap of the alpha sweep relative to the first
GAP_SHRINK = 0.25


class ReproductionCheck(BaseModel):
    name: str
    relation: str = Field(..., description="'==', '<=', '>=' or 'is'")
    expected: float
    computed: float
    tolerance: float = 0.0
    passed: bool


class ReproductionReport(BaseModel):
    example_id: str
    scenario: str
    passed: bool
    checks: List[ReproductionCheck] = Field(default_factory=list)


def _check(name: str, computed: float, relation: str, expected: float, tolerance: float = 0.0) -> ReproductionCheck:
    if relation == "==":
        passed = abs(computed - expected) <= tolerance
    elif relation == "<=":
        passed = computed <= expected + tolerance
    elif relation == ">=":
        passed = computed >= expected - tolerance
    else:
        passed = computed == expected
    return ReproductionCheck(
        name=name,
        relation=relation,
        expected=float(expected),
        computed=float(computed),
        tolerance=tolerance,
        passed=bool(passed),
    )


def _revenue_tolerance(scenario: Scenario, step: float) -> float:
    return scenario.tolerances.revenue_steps * step


def _example1(scenario: Scenario, threads: int) -> List[ReproductionCheck]:
    from ratchet_pricing.equilibrium.two_period import solve_pbe_star
    from ratchet_pricing.mechanism import solve_relaxed
    from ratchet_pricing.pricing import evaluate_commitment, static_posting_benchmark

    problem = build_problem(scenario)
    tol = _revenue_tolerance(scenario, problem.prior.step)
    benchmark = static_posting_benchmark(problem)
    triple = evaluate_commitment(1.5, 1.0, 2.0, problem)
    relaxed = solve_relaxed(problem, threads=threads)
    outcome = solve_pbe_star(problem, threads=threads)
    return [
        _check("benchmark", benchmark.revenue, "==", 2.0, 1e-6),
        _check("commitment_triple_revenue", triple.revenue, "==", 2.5, 1e-6),
        _check("commitment_triple_all_accept", float(triple.all_accept), "is", 1.0),
        _check("relaxed_value", relaxed.value, "==", 2.0, tol),
        _check("equilibrium_revenue", outcome.revenue, "<=", benchmark.revenue, tol),
    ]


def _d1_filter(scenario: Scenario, threads: int) -> List[ReproductionCheck]:
    from ratchet_pricing.domain.games import BeliefRule
    from ratchet_pricing.equilibrium.discrete import enumerate_discrete, find_profile

    game = build_game(scenario)
    tie_rule = scenario.enumeration.tie_rule
    loose = enumerate_discrete(game, tie_rule=tie_rule, belief_rule=BeliefRule.UNRESTRICTED)
    strict = enumerate_discrete(game, tie_rule=tie_rule, belief_rule=BeliefRule.PBE_STAR)
    return [
        _check("survives_unrestricted", float(bool(find_profile(loose, 1.5, 1.0, 2.0))), "is", 1.0),
        _check("survives_pbe_star", float(bool(find_profile(strict, 1.5, 1.0, 2.0))), "is", 0.0),
    ]


def _escape(benchmark_value: float, floor: float) -> Callable[[Scenario, int], List[ReproductionCheck]]:
    def run(scenario: Scenario, threads: int) -> List[ReproductionCheck]:
        from ratchet_pricing.equilibrium.discrete import discrete_posting_benchmark, enumerate_discrete

        game = build_game(scenario)
        benchmark = discrete_posting_benchmark(game)
        outcomes = enumerate_discrete(
            game,
            tie_rule=scenario.enumeration.tie_rule,
            belief_rule=scenario.enumeration.belief_rule,
        )
        best = outcomes[0].revenue if outcomes else float("-inf")
        return [
            _check("benchmark", benchmark.revenue, "==", benchmark_value, 1e-9),
            _check("best_enumerated", best, ">=", floor, 1e-9),
        ]

    return run


def _gap_checks(frame: pd.DataFrame, tol: float) -> List[ReproductionCheck]:
    """
    The commitment price gap |p_R - p_A| must not grow with alpha and must
    end up at no more than a quarter of where it started.
    """
    gaps = (frame["p_R_commit"] - frame["p_A_commit"]).abs().to_numpy()
    params = frame["param"].to_numpy()
    checks = [
        _check(f"gap_nonincreasing@{b:g}", float(later), "<=", float(earlier), tol)
        for b, earlier, later in zip(params[1:], gaps[:-1], gaps[1:])
    ]
    if gaps.size:
        shrunk = float(GAP_SHRINK * gaps[0])
        checks.append(
            _check("gap_shrinks_toward_perfect_correlation", float(gaps[-1]), "<=", shrunk, tol)
        )
    return checks


def _fig1(scenario: Scenario, threads: int) -> List[ReproductionCheck]:
    from ratchet_pricing.harness.sweep import run_sweep

    spec = bundled_sweep("fig1_sweep")
    frame = run_sweep(scenario, spec, threads=threads)
    step = build_problem(scenario).kernel_accept.to_grid.step
    tol = _revenue_tolerance(scenario, step)

    checks = [_check("failed_rows", float((frame["error"] != "").sum()), "is", 0.0)]
    interior = frame[(frame["param"] >= 0.2) & (frame["param"] <= 0.8)]
    for row in interior.itertuples():
        checks.append(_check(f"p_A_commit<=p_star@{row.param:g}", row.p_A_commit, "<=", row.p_star, tol))
        checks.append(_check(f"p_star<=p_R_commit@{row.param:g}", row.p_star, "<=", row.p_R_commit, tol))
    for row in frame.itertuples():
        checks.append(_check(f"p_A_eq>=p_R_eq@{row.param:g}", row.p_A_eq, ">=", row.p_R_eq))
    checks.extend(_gap_checks(frame.sort_values("param"), tol))
    return checks


PIPELINES: Dict[str, Callable[[Scenario, int], List[ReproductionCheck]]] = {
    "ex1": _example1,
    "ex2-d1": _d1_filter,
    "ex3-negative": _escape(2.0, 2.5),
    "ex4-substitutes": _escape(1.0, 1.25),
    "fig1-sweep": _fig1,
}


def reproduce(example_id: str, grid: Optional[int] = None, threads: int = THREADS) -> ReproductionReport:
    """Run one reproduction target; raises ReproductionAssertionError with the report on a mismatch."""
    if example_id not in PIPELINES:
        raise InvalidInputError(
            f"unknown reproduction '{example_id}' (have: {', '.join(sorted(PIPELINES))})"
        )
    scenario = bundled(REPRODUCTIONS[example_id])
    if grid is not None:
        scenario = scenario.with_grid(grid)
    logger.info(f"Reproducing {example_id} on scenario '{scenario.name}'")

    checks = PIPELINES[example_id](scenario, threads)
    report = ReproductionReport(
        example_id=example_id,
        scenario=scenario.name,
        passed=all(c.passed for c in checks),
        checks=checks,
    )
    if not report.passed:
        failed = [f"{c.name}: expected {c.relation} {c.expected:.9g}, got {c.computed:.9g}" for c in checks if not c.passed]
        logger.error(f"{example_id} does not reproduce: {'; '.join(failed)}")
        raise ReproductionAssertionError(f"{example_id} does not reproduce: {'; '.join(failed)}", report)
    logger.success(f"{example_id} reproduces ({len(checks)} checks)")
    return report
