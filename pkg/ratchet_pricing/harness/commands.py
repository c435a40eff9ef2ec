"""
Command layer: one Input/Output pair per CLI subcommand.

Every command returns its output model, never raises; failures come back with
success=False, the error message and the exit code the CLI should use.
"""

import time
from typing import Any, Callable, Dict, List, Optional, Type, TypeVar

from loguru import logger
from pydantic import BaseModel, Field

from ratchet_pricing.config import THREADS
from ratchet_pricing.domain.games import BeliefRule, TieRule
from ratchet_pricing.domain.results import (
    BenchmarkResult,
    CommitmentResult,
    DiagonalCertificate,
    EquilibriumOutcome,
    MonopolyResult,
    MultiPeriodOutcome,
    RelaxedSolution,
    VerificationReport,
)
from ratchet_pricing.exceptions import (
    AssumptionViolatedError,
    BudgetExceededError,
    HorizonLimitError,
    InvalidInputError,
    ReproductionAssertionError,
    ScenarioParseError,
    ScenarioValidationError,
    SizeLimitExceededError,
)
from ratchet_pricing.harness.oracle import OracleQuery, OracleResult
from ratchet_pricing.harness.reproduce import ReproductionReport
from ratchet_pricing.harness.scenarios import ModelKind, Scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ASSERTION = 2
EXIT_VALIDATION = 3

_VALIDATION_ERRORS = (
    ScenarioParseError,
    ScenarioValidationError,
    InvalidInputError,
    AssumptionViolatedError,
    HorizonLimitError,
    SizeLimitExceededError,
    BudgetExceededError,
)


def exit_code_for(error: Exception) -> int:
    if isinstance(error, ReproductionAssertionError):
        return EXIT_ASSERTION
    if isinstance(error, _VALIDATION_ERRORS):
        return EXIT_VALIDATION
    return EXIT_ERROR


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------


class ScenarioInput(BaseModel):
    scenario: str = Field(..., description="Scenario file path or bundled scenario id")
    grid: Optional[int] = Field(None, ge=2)
    threads: int = Field(THREADS, ge=1)
    seed: Optional[int] = None


class EnumerateInput(ScenarioInput):
    tie_rule: Optional[TieRule] = None
    belief_rule: Optional[BeliefRule] = None


class MultiInput(ScenarioInput):
    commit_option: bool = True


class SweepInput(ScenarioInput):
    sweep: Optional[str] = Field(None, description="Sweep spec path; the scenario's bundled sweep when omitted")
    csv: Optional[str] = None


class OracleInput(ScenarioInput):
    query: OracleQuery
    p1: Optional[float] = None
    p_A: Optional[float] = None
    p_R: Optional[float] = None


class ReproduceInput(BaseModel):
    example_id: str
    grid: Optional[int] = Field(None, ge=2)
    threads: int = Field(THREADS, ge=1)


# ---------------------------------------------------------------------------
# Outputs
# ---------------------------------------------------------------------------


class CommandOutput(BaseModel):
    success: bool
    command: str
    scenario: str = ""
    seed: Optional[int] = None
    processing_time: float
    error_message: Optional[str] = None
    exit_code: int = EXIT_OK


class CheckOutput(CommandOutput):
    all_hold: Optional[bool] = None
    reports: List[Dict[str, Any]] = Field(default_factory=list)


class MonopolyOutput(CommandOutput):
    periods: List[MonopolyResult] = Field(default_factory=list)
    benchmark: Optional[BenchmarkResult] = None


class RelaxOutput(CommandOutput):
    solution: Optional[RelaxedSolution] = None
    certificate: Optional[DiagonalCertificate] = None


class CommitOutput(CommandOutput):
    result: Optional[CommitmentResult] = None
    benchmark: Optional[BenchmarkResult] = None


class EquilibriumOutput(CommandOutput):
    outcome: Optional[EquilibriumOutcome] = None
    verification: Optional[VerificationReport] = None
    benchmark: Optional[BenchmarkResult] = None


class EnumerateOutput(CommandOutput):
    count: int = 0
    outcomes: List[EquilibriumOutcome] = Field(default_factory=list)
    benchmark: Optional[BenchmarkResult] = None


class MultiOutput(CommandOutput):
    outcome: Optional[MultiPeriodOutcome] = None


class SweepOutput(CommandOutput):
    rows: List[Dict[str, Any]] = Field(default_factory=list)
    csv_path: Optional[str] = None


class OracleOutput(CommandOutput):
    result: Optional[OracleResult] = None


class ReproduceOutput(CommandOutput):
    report: Optional[ReproductionReport] = None


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

Output = TypeVar("Output", bound=CommandOutput)


def _scenario(input_data: ScenarioInput) -> Scenario:
    from ratchet_pricing.harness.registry import resolve

    scenario = resolve(input_data.scenario)
    if input_data.grid is not None:
        scenario = scenario.with_grid(input_data.grid)
    if input_data.seed is not None:
        scenario = scenario.with_seed(input_data.seed)
    return scenario


def _execute(
    name: str,
    input_data: ScenarioInput,
    output_cls: Type[Output],
    body: Callable[[Scenario], Dict[str, Any]],
) -> Output:
    start_time = time.time()
    scenario_name = input_data.scenario
    seed = input_data.seed
    try:
        scenario = _scenario(input_data)
        scenario_name, seed = scenario.name, scenario.seed
        logger.info(f"Running '{name}' on scenario '{scenario.name}'")
        fields = body(scenario)
        exit_code = fields.pop("exit_code", EXIT_OK)
        error_message = fields.pop("error_message", None)
        return output_cls(
            success=exit_code == EXIT_OK,
            command=name,
            scenario=scenario_name,
            seed=seed,
            processing_time=time.time() - start_time,
            error_message=error_message,
            exit_code=exit_code,
            **fields,
        )
    except Exception as e:
        code = exit_code_for(e)
        if code == EXIT_ERROR:
            logger.exception(f"'{name}' failed: {e}")
        else:
            logger.error(f"'{name}' failed: {e}")
        return output_cls(
            success=False,
            command=name,
            scenario=scenario_name,
            seed=seed,
            processing_time=time.time() - start_time,
            error_message=str(e),
            exit_code=code,
        )


def check_command(input_data: ScenarioInput) -> CheckOutput:
    from ratchet_pricing.harness.scenarios import check_scenario

    def body(scenario: Scenario) -> Dict[str, Any]:
        reports = check_scenario(scenario)
        return {"all_hold": all(r.holds for r in reports), "reports": [r.to_json_dict() for r in reports]}

    return _execute("check", input_data, CheckOutput, body)


def monopoly_command(input_data: ScenarioInput) -> MonopolyOutput:
    def body(scenario: Scenario) -> Dict[str, Any]:
        from ratchet_pricing.dist_core import marginal
        from ratchet_pricing.equilibrium.multi_period import multi_period_benchmark
        from ratchet_pricing.harness.scenarios import build_multi_period, build_problem
        from ratchet_pricing.pricing import monopoly_price, static_posting_benchmark

        if scenario.model == ModelKind.MULTI_PERIOD:
            benchmark = multi_period_benchmark(build_multi_period(scenario))
            periods = [MonopolyResult(price=p, revenue=r) for p, r in zip(benchmark.prices, benchmark.per_period)]
            return {"periods": periods, "benchmark": benchmark}
        problem = build_problem(scenario)
        periods = [monopoly_price(problem.prior), monopoly_price(marginal(problem.prior, problem.kernel_reject))]
        return {"periods": periods, "benchmark": static_posting_benchmark(problem)}

    return _execute("monopoly", input_data, MonopolyOutput, body)


def relax_command(input_data: ScenarioInput) -> RelaxOutput:
    def body(scenario: Scenario) -> Dict[str, Any]:
        from ratchet_pricing.harness.scenarios import build_problem
        from ratchet_pricing.mechanism import claim1_certify, solve_relaxed

        problem = build_problem(scenario)
        solution = solve_relaxed(problem, threads=input_data.threads)
        certificate = None
        if not problem.complements:
            certificate = claim1_certify(problem, solution.k)
        return {"solution": solution, "certificate": certificate}

    return _execute("relax", input_data, RelaxOutput, body)


def commit_command(input_data: ScenarioInput) -> CommitOutput:
    def body(scenario: Scenario) -> Dict[str, Any]:
        from ratchet_pricing.harness.scenarios import build_problem
        from ratchet_pricing.mechanism import commitment_optimum
        from ratchet_pricing.pricing import static_posting_benchmark

        problem = build_problem(scenario)
        return {"result": commitment_optimum(problem), "benchmark": static_posting_benchmark(problem)}

    return _execute("commit", input_data, CommitOutput, body)


def equilibrium_command(input_data: ScenarioInput) -> EquilibriumOutput:
    def body(scenario: Scenario) -> Dict[str, Any]:
        from ratchet_pricing.equilibrium.two_period import solve_pbe_star
        from ratchet_pricing.equilibrium.verification import verify_equilibrium
        from ratchet_pricing.harness.scenarios import build_problem
        from ratchet_pricing.pricing import static_posting_benchmark

        problem = build_problem(scenario)
        outcome = solve_pbe_star(problem, n_price=scenario.grids.n_price, threads=input_data.threads)
        report = verify_equilibrium(outcome, problem, mass_tol=scenario.tolerances.mass)
        fields: Dict[str, Any] = {
            "outcome": outcome,
            "verification": report,
            "benchmark": static_posting_benchmark(problem),
        }
        if not report.passed:
            fields["exit_code"] = EXIT_ASSERTION
            fields["error_message"] = "; ".join(report.failures)
        return fields

    return _execute("equilibrium", input_data, EquilibriumOutput, body)


def enumerate_command(input_data: EnumerateInput) -> EnumerateOutput:
    def body(scenario: Scenario) -> Dict[str, Any]:
        from ratchet_pricing.equilibrium.discrete import discrete_posting_benchmark, enumerate_discrete
        from ratchet_pricing.harness.scenarios import build_game

        game = build_game(scenario)
        outcomes = enumerate_discrete(
            game,
            tie_rule=input_data.tie_rule or scenario.enumeration.tie_rule,
            belief_rule=input_data.belief_rule or scenario.enumeration.belief_rule,
        )
        return {"count": len(outcomes), "outcomes": outcomes, "benchmark": discrete_posting_benchmark(game)}

    return _execute("enumerate", input_data, EnumerateOutput, body)


def multi_command(input_data: MultiInput) -> MultiOutput:
    def body(scenario: Scenario) -> Dict[str, Any]:
        from ratchet_pricing.equilibrium.multi_period import solve_multi_period
        from ratchet_pricing.harness.scenarios import build_multi_period

        outcome = solve_multi_period(build_multi_period(scenario), commit_option=input_data.commit_option)
        fields: Dict[str, Any] = {"outcome": outcome}
        if not outcome.prices_monotone:
            fields["exit_code"] = EXIT_ASSERTION
            fields["error_message"] = "accept-side prices fall below reject-side prices at some history"
        return fields

    return _execute("multi", input_data, MultiOutput, body)


def sweep_command(input_data: SweepInput) -> SweepOutput:
    def body(scenario: Scenario) -> Dict[str, Any]:
        from ratchet_pricing.harness.registry import bundled_sweep
        from ratchet_pricing.harness.scenarios import load_sweep
        from ratchet_pricing.harness.sweep import run_sweep

        spec = load_sweep(input_data.sweep) if input_data.sweep else bundled_sweep(scenario.name)
        frame = run_sweep(scenario, spec, threads=input_data.threads, csv_path=input_data.csv)
        rows = frame.astype(object).where(frame.notna(), None).to_dict(orient="records")
        return {"rows": rows, "csv_path": input_data.csv}

    return _execute("sweep", input_data, SweepOutput, body)


def oracle_command(input_data: OracleInput) -> OracleOutput:
    def body(scenario: Scenario) -> Dict[str, Any]:
        from ratchet_pricing.harness.oracle import oracle_bruteforce
        from ratchet_pricing.harness.scenarios import build_problem

        result = oracle_bruteforce(
            build_problem(scenario),
            input_data.query,
            p1=input_data.p1,
            p_A=input_data.p_A,
            p_R=input_data.p_R,
        )
        return {"result": result}

    return _execute("oracle", input_data, OracleOutput, body)


def reproduce_command(input_data: ReproduceInput) -> ReproduceOutput:
    from ratchet_pricing.harness.reproduce import reproduce

    start_time = time.time()
    try:
        report = reproduce(input_data.example_id, grid=input_data.grid, threads=input_data.threads)
        return ReproduceOutput(
            success=True,
            command="reproduce",
            scenario=report.scenario,
            processing_time=time.time() - start_time,
            report=report,
        )
    except Exception as e:
        code = exit_code_for(e)
        if code == EXIT_ERROR:
            logger.exception(f"reproduce {input_data.example_id} failed: {e}")
        return ReproduceOutput(
            success=False,
            command="reproduce",
            scenario=input_data.example_id,
            processing_time=time.time() - start_time,
            error_message=str(e),
            exit_code=code,
            report=getattr(e, "report", None),
        )
