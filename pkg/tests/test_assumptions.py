"""
Unit tests for ratchet_pricing.assumptions.

Each check returns a report whose holds flag agrees with its witness list;
these tests pin down which standard instances pass and which fail.
"""

import pytest
from pydantic import ValidationError

from ratchet_pricing.assumptions import (
    check_ar1_chain,
    check_complement,
    check_first_order_dominance,
    check_lipschitz,
    check_log_concave,
    check_mlrp,
    check_monotone_hazard,
    check_problem,
    failing,
    summarize,
)
from ratchet_pricing.dist_core import (
    gaussian_ar1,
    independent_kernel,
    kernel_from_table,
    make_discrete,
    make_truncated_normal,
    make_uniform,
    perfect_correlation_kernel,
)
from ratchet_pricing.domain.problem import PricingProblem
from ratchet_pricing.domain.results import AssumptionName, AssumptionReport, Witness
from ratchet_pricing.exceptions import InvalidInputError, UnsupportedKindError
from ratchet_pricing.harness.registry import bundled
from ratchet_pricing.harness.scenarios import build_problem

# ============================================================================
# TEST SUITE 1: Report Model
# ============================================================================


class TestAssumptionReport:
    """Test suite for the report invariant."""

    def test_holds_requires_no_witnesses(self):
        with pytest.raises(ValidationError):
            AssumptionReport(
                name=AssumptionName.MLRP,
                holds=True,
                witnesses=[Witness(index=[0, 1], value=-1.0)],
            )

    def test_summary_names_failures(self):
        reports = [
            AssumptionReport(name=AssumptionName.MLRP, holds=True),
            AssumptionReport(
                name=AssumptionName.LIPSCHITZ,
                holds=False,
                witnesses=[Witness(index=[0, 1], value=-0.1)],
            ),
        ]

        assert failing(reports) == [reports[1]]
        assert summarize(reports) == "failed lipschitz"


# ============================================================================
# TEST SUITE 2: Two-Period Checks
# ============================================================================


class TestTwoPeriodChecks:
    """Test suite for MLRP, Lipschitz and regularity."""

    def test_independence_is_weak_mlrp_only(self):
        """Identical rows satisfy weak MLRP but not the strict version."""
        prior = make_uniform(1.0, 2.0, 11)
        kernel = independent_kernel(prior, make_uniform(1.0, 2.0, 11))

        assert check_mlrp(kernel).holds
        assert not check_mlrp(kernel, strict=True).holds

    def test_mlrp_violation_has_witness(self):
        """Anti-correlated rows break MLRP."""
        prior = make_discrete([1.0, 2.0], [0.5, 0.5])
        kernel = kernel_from_table(prior, [1.0, 2.0], [[0.2, 0.8], [0.8, 0.2]])
        report = check_mlrp(kernel)

        assert not report.holds
        assert report.witnesses[0].index == [0, 0]
        assert report.margin < 0

    def test_perfect_correlation_breaks_lipschitz(self):
        """theta2 = theta1 moves the conditional mean one for one."""
        grid = make_uniform(1.0, 2.0, 11)

        assert not check_lipschitz(perfect_correlation_kernel(grid), 1.0).holds

    def test_lipschitz_rejects_bad_delta(self):
        grid = make_uniform(1.0, 2.0, 5)
        with pytest.raises(InvalidInputError):
            check_lipschitz(perfect_correlation_kernel(grid), 1.5)
        with pytest.raises(InvalidInputError):
            check_lipschitz(perfect_correlation_kernel(grid), -0.1)

    def test_lipschitz_holds_at_zero_delta(self):
        """delta = 0 makes the allowance infinite, even under perfect correlation."""
        grid = make_uniform(1.0, 2.0, 5)
        report = check_lipschitz(perfect_correlation_kernel(grid), 0.0)

        assert report.holds
        assert report.witnesses == []

    def test_gaussian_ar1_passes(self, gaussian_problem):
        """Gaussian AR(1) with slope 0.5 has MLRP and stays Lipschitz."""
        reports = {r.name: r for r in check_problem(gaussian_problem)}

        assert set(reports) == {AssumptionName.MLRP, AssumptionName.LIPSCHITZ, AssumptionName.REGULARITY}
        assert reports[AssumptionName.MLRP].holds
        assert reports[AssumptionName.LIPSCHITZ].holds

    def test_discrete_prior_skips_regularity(self):
        prior = make_discrete([1.0, 2.0], [0.5, 0.5])
        kernel = kernel_from_table(prior, [1.0, 2.0], [[0.8, 0.2], [0.2, 0.8]])

        reports = check_problem(PricingProblem.baseline(prior, kernel, 1.0))
        assert AssumptionName.REGULARITY not in {r.name for r in reports}


# ============================================================================
# TEST SUITE 3: Supplementary and AR(1) Checks
# ============================================================================


class TestSupplementaryChecks:
    """Test suite for log-concavity, hazard, dominance and the AR(1) chain."""

    def test_normal_cells_are_log_concave(self):
        assert check_log_concave(make_truncated_normal(0.0, 1.0, 51)).holds

    def test_log_concave_needs_density(self):
        with pytest.raises(UnsupportedKindError):
            check_log_concave(make_discrete([1.0, 2.0], [0.5, 0.5]))

    def test_uniform_hazard_increases(self):
        assert check_monotone_hazard(make_uniform(0.0, 1.0, 21)).holds

    def test_ar1_kernel_dominance(self, gaussian_problem):
        assert check_first_order_dominance(gaussian_problem.kernel_accept).holds

    def test_same_kernel_is_a_weak_complement(self, gaussian_problem):
        kernel = gaussian_problem.kernel_accept
        assert check_complement(kernel, kernel).holds

    def test_ar1_slope_bound(self):
        """alpha must stay below 1/(2 delta)."""
        prior = make_truncated_normal(2.0, 0.5, 21, 4.0)
        good = check_ar1_chain(prior, [gaussian_ar1(0.3, 1.4, 0.5, 21, 4.0)], 1.0)
        bad = check_ar1_chain(prior, [gaussian_ar1(0.6, 1.4, 0.5, 21, 4.0)], 1.0)

        assert failing(good) == []
        assert [r.name for r in failing(bad)] == [AssumptionName.AR1_SLOPE]

    def test_complements_use_primed_checks(self):
        """Purchase-dependent kernels get the per-allocation variants."""
        problem = build_problem(bundled("complements_gaussian").with_grid(41))
        names = {r.name for r in check_problem(problem)}

        assert AssumptionName.MLRP_X in names
        assert AssumptionName.LIPSCHITZ_X in names
        assert AssumptionName.REGULARITY_X in names
        assert AssumptionName.COMPLEMENT in names
        assert AssumptionName.MLRP not in names
