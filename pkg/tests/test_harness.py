"""
Tests for the harness: scenario files, the bundled registry, brute-force
oracles, parameter sweeps and the reproduction targets.
"""

import json

import pandas as pd
import pytest

from ratchet_pricing.domain.results import AssumptionName
from ratchet_pricing.exceptions import (
    BudgetExceededError,
    InvalidInputError,
    ScenarioParseError,
    ScenarioValidationError,
)
from ratchet_pricing.harness.oracle import OracleQuery, oracle_bruteforce
from ratchet_pricing.harness.registry import bundled, list_scenarios, resolve
from ratchet_pricing.harness.reproduce import _gap_checks, reproduce
from ratchet_pricing.harness.scenarios import (
    SweepSpec,
    build_problem,
    check_scenario,
    load_scenario,
    parse_scenario,
    random_instances,
    set_parameter,
)
from ratchet_pricing.harness.sweep import SWEEP_COLUMNS, run_sweep
from ratchet_pricing.mechanism import solve_relaxed

UNIFORM_SCENARIO = {
    "model": "two_period",
    "delta": 1.0,
    "prior": {"uniform": {"lo": 1.0, "hi": 2.0}},
    "kernel": {"independent": {"uniform": {"lo": 1.0, "hi": 2.0}}},
    "grids": {"n_theta": 11, "n_price": 11},
}


# ============================================================================
# TEST SUITE 1: Scenario Files
# ============================================================================


class TestScenarioFiles:
    """Test suite for parsing and validating scenarios."""

    def test_missing_delta(self):
        data = {k: v for k, v in UNIFORM_SCENARIO.items() if k != "delta"}
        with pytest.raises(ScenarioValidationError) as exc_info:
            parse_scenario(data)
        assert exc_info.value.field_path == "delta"

    def test_delta_out_of_range(self):
        with pytest.raises(ScenarioValidationError) as exc_info:
            parse_scenario({**UNIFORM_SCENARIO, "delta": 1.5})
        assert exc_info.value.field_path == "delta"

    def test_unknown_key_rejected(self):
        with pytest.raises(ScenarioValidationError):
            parse_scenario({**UNIFORM_SCENARIO, "horizon": 3})

    def test_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")

        with pytest.raises(ScenarioParseError):
            load_scenario(path)

    def test_name_defaults_to_file_stem(self, tmp_path):
        path = tmp_path / "my_instance.json"
        path.write_text(json.dumps(UNIFORM_SCENARIO), encoding="utf-8")

        scenario = load_scenario(path)
        assert scenario.name == "my_instance"
        assert resolve(str(path)).name == "my_instance"

    def test_set_parameter(self):
        scenario = set_parameter(bundled("fig1_sweep"), "kernel.ar1.alpha", 0.3)
        assert scenario.kernel.ar1.alpha == pytest.approx(0.3)

    def test_set_unknown_parameter(self):
        with pytest.raises(ScenarioValidationError):
            set_parameter(bundled("fig1_sweep"), "kernel.ar1.beta", 0.3)

    def test_stationary_step_needs_normal_prior(self):
        data = {
            **UNIFORM_SCENARIO,
            "kernel": {"ar1": {"alpha": 0.5, "stationary": True}},
        }
        with pytest.raises(InvalidInputError):
            build_problem(parse_scenario(data))

    def test_complements_share_a_grid(self):
        problem = build_problem(bundled("complements_gaussian").with_grid(41))

        assert problem.kernel_accept.x1_tag == 1
        assert problem.kernel_reject.x1_tag == 0
        assert problem.complements
        assert problem.shared_to_grid

    def test_random_instances_are_seeded(self):
        first = [s.model_dump() for s in random_instances(7, 3, 21)]
        second = [s.model_dump() for s in random_instances(7, 3, 21)]

        assert first == second
        assert all(s["seed"] == 7 for s in first)

    def test_strictness_reaches_the_checks(self):
        """A strictness wider than every Lipschitz allowance makes that check fail."""
        loose = {r.name: r for r in check_scenario(parse_scenario(UNIFORM_SCENARIO))}
        tight = parse_scenario({**UNIFORM_SCENARIO, "tolerances": {"strictness": 2.0}})
        strict = {r.name: r for r in check_scenario(tight)}

        assert loose[AssumptionName.LIPSCHITZ].holds
        assert not strict[AssumptionName.LIPSCHITZ].holds

    def test_tolerances_must_be_positive(self):
        with pytest.raises(ScenarioValidationError):
            parse_scenario({**UNIFORM_SCENARIO, "tolerances": {"mass": 0.0}})


# ============================================================================
# TEST SUITE 2: Registry
# ============================================================================


class TestRegistry:
    """Test suite for bundled scenarios."""

    def test_listing(self):
        names = list_scenarios()

        assert "example1" in names
        assert "multi_period" in names
        assert "fig1_alpha" not in names

    def test_unknown_scenario(self):
        with pytest.raises(ScenarioParseError):
            resolve("no_such_scenario")


# ============================================================================
# TEST SUITE 3: Oracles
# ============================================================================


class TestOracles:
    """Test suite for the brute-force cross-checks."""

    def test_relaxation_oracle_matches_solver(self):
        problem = build_problem(bundled("example1_small"))
        oracle = oracle_bruteforce(problem, OracleQuery.RELAXATION)
        solution = solve_relaxed(problem, check=False)

        assert oracle.value == pytest.approx(solution.value, abs=1e-9)

    def test_threshold_oracle(self):
        problem = build_problem(bundled("example1_small"))
        result = oracle_bruteforce(problem, OracleQuery.THRESHOLD, p1=1.9, p_A=1.0, p_R=2.0)

        assert result.value == pytest.approx(1.4)

    def test_monopoly_oracle(self):
        data = {**UNIFORM_SCENARIO, "prior": {"uniform": {"lo": 0.0, "hi": 1.0}}}
        problem = build_problem(parse_scenario(data))
        result = oracle_bruteforce(problem, OracleQuery.MONOPOLY)

        assert result.argmax["price"] == pytest.approx(0.5)

    def test_benchmark_oracle(self):
        problem = build_problem(bundled("example1_small"))
        assert oracle_bruteforce(problem, "benchmark").value == pytest.approx(2.0)

    def test_budget(self):
        problem = build_problem(bundled("example1_small"))
        with pytest.raises(BudgetExceededError):
            oracle_bruteforce(problem, OracleQuery.RELAXATION, budget=10)

    def test_threshold_needs_prices(self):
        problem = build_problem(bundled("example1_small"))
        with pytest.raises(InvalidInputError):
            oracle_bruteforce(problem, OracleQuery.THRESHOLD, p1=1.0)


# ============================================================================
# TEST SUITE 4: Sweeps
# ============================================================================


class TestSweep:
    """Test suite for parameter sweeps."""

    @pytest.fixture
    def scenario(self):
        return bundled("fig1_sweep").with_grid(41)

    @pytest.fixture
    def spec(self):
        return SweepSpec(parameter="kernel.ar1.alpha", values=[0.6, 0.3], outputs=["benchmark", "commitment"])

    def test_rows_sorted(self, scenario, spec, tmp_path):
        csv_path = tmp_path / "out" / "sweep.csv"
        frame = run_sweep(scenario, spec, threads=1, csv_path=csv_path)

        assert frame["param"].tolist() == [0.3, 0.6]
        assert (frame["error"] == "").all()
        assert list(pd.read_csv(csv_path).columns) == SWEEP_COLUMNS

    def test_thread_count_does_not_matter(self, scenario, spec):
        one = run_sweep(scenario, spec, threads=1)
        two = run_sweep(scenario, spec, threads=2)

        pd.testing.assert_frame_equal(one, two)

    def test_failures_fill_error_column(self, scenario):
        """A non-stationary slope fails the row, not the sweep."""
        spec = SweepSpec(parameter="kernel.ar1.alpha", values=[1.5], outputs=["benchmark"])
        frame = run_sweep(scenario, spec, threads=1)

        assert frame.loc[0, "error"] != ""


# ============================================================================
# TEST SUITE 5: Reproduction
# ============================================================================


class TestReproduce:
    """Test suite for the published examples."""

    def test_example1_small_grid(self):
        report = reproduce("ex1", grid=41)
        assert report.passed

    @pytest.mark.parametrize("example_id", ["ex2-d1", "ex3-negative", "ex4-substitutes"])
    def test_finite_examples(self, example_id):
        report = reproduce(example_id)

        assert report.passed
        assert all(check.passed for check in report.checks)

    def test_unknown_example(self):
        with pytest.raises(InvalidInputError):
            reproduce("ex9")

    def test_gap_checks_reject_a_widening_gap(self):
        """A gap that widens again short of zero does not count as convergence."""
        frame = pd.DataFrame(
            {"param": [0.2, 0.5, 0.99], "p_A_commit": [1.5, 1.55, 1.5], "p_R_commit": [2.5, 2.45, 2.45]}
        )
        checks = {c.name: c for c in _gap_checks(frame, 0.01)}

        assert checks["gap_nonincreasing@0.5"].passed
        assert not checks["gap_nonincreasing@0.99"].passed
        assert not checks["gap_shrinks_toward_perfect_correlation"].passed

    def test_gap_checks_accept_convergence(self):
        frame = pd.DataFrame(
            {"param": [0.2, 0.5, 0.99], "p_A_commit": [1.5, 1.8, 1.95], "p_R_commit": [2.5, 2.2, 2.05]}
        )

        assert all(c.passed for c in _gap_checks(frame, 0.01))

    @pytest.mark.slow
    def test_example1_default_grid(self):
        assert reproduce("ex1").passed

    @pytest.mark.slow
    def test_fig1_sweep(self):
        assert reproduce("fig1-sweep", threads=2).passed
