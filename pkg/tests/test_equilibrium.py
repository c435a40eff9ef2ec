"""
Tests for the two-period equilibrium solver, its verifier and the finite-game
enumerator, including the published counterexamples.
"""

import pytest
from pydantic import ValidationError

from ratchet_pricing.dist_core import make_uniform, perfect_correlation_kernel
from ratchet_pricing.domain.games import BeliefRule, DiscreteGame, TieRule
from ratchet_pricing.domain.problem import PricingProblem
from ratchet_pricing.equilibrium import (
    continuation_fixed_points,
    discrete_posting_benchmark,
    enumerate_discrete,
    find_profile,
    seller_value_curve,
    solve_pbe_star,
    verify_equilibrium,
)
from ratchet_pricing.equilibrium.discrete import game_from_problem, problem_from_game
from ratchet_pricing.equilibrium.two_period import continuations
from ratchet_pricing.exceptions import AssumptionViolatedError, InvalidInputError, SizeLimitExceededError
from ratchet_pricing.harness.registry import bundled
from ratchet_pricing.harness.scenarios import build_game, build_problem
from ratchet_pricing.pricing import monopoly_prices

# ============================================================================
# TEST SUITE 1: Two-Period PBE-star
# ============================================================================


class TestTwoPeriodSolver:
    """Test suite for the seller-optimal PBE-star."""

    def test_independent_uniform(self, uniform_problem):
        """
        Independent values: everyone buys today. 1 and 1.025 earn the same
        on this grid, and pricing the off-path refusal at 1.025 lets the
        seller raise p1 by 1/41.
        """
        outcome = solve_pbe_star(uniform_problem)

        assert outcome.p1 == pytest.approx(1.0 + 1 / 41)
        assert outcome.k == pytest.approx(1.0)
        assert outcome.p_A == pytest.approx(1.0)
        assert outcome.p_R == pytest.approx(1.025)
        assert outcome.revenue == pytest.approx(2.0 + 1 / 41)
        assert outcome.tie_sensitive

    def test_zero_delta(self, uniform_problem):
        """With delta = 0 the seller posts a first-period monopoly price and earns pi1*."""
        problem = uniform_problem.with_delta(0.0)
        outcome = solve_pbe_star(problem)

        assert outcome.revenue == pytest.approx(1.0)
        assert outcome.p1 == pytest.approx(outcome.k)
        assert any(outcome.p1 == pytest.approx(p) for p in monopoly_prices(problem.prior))
        assert verify_equilibrium(outcome, problem).passed

    def test_tied_monopoly_prices_are_enumerated(self, uniform_problem):
        """Every pair of tied second-period prices appears as its own continuation."""
        pairs = {
            (c.k_index, round(c.p_A, 9), round(c.p_R, 9)) for c in continuations(uniform_problem) if c.k_index == 0
        }

        assert pairs == {(0, 1.0, 1.0), (0, 1.0, 1.025), (0, 1.025, 1.0), (0, 1.025, 1.025)}

    def test_beliefs_reported(self, uniform_problem):
        """Everyone accepts, so the rejection history is read as the lowest type."""
        outcome = solve_pbe_star(uniform_problem)
        beliefs = {b.history: b for b in outcome.beliefs}

        assert beliefs["A"].kind == "posterior"
        assert beliefs["A"].mass == pytest.approx(1.0)
        assert beliefs["R"].kind == "point"
        assert beliefs["R"].mass == pytest.approx(0.0)

    def test_ratchet_effect(self, gaussian_problem):
        """Positive correlation: the price after a purchase is never below the price after a refusal."""
        outcome = solve_pbe_star(gaussian_problem)

        assert outcome.p_A >= outcome.p_R
        assert all(outcome.acceptance[i] <= outcome.acceptance[i + 1] for i in range(len(outcome.acceptance) - 1))

    def test_fixed_points_at_a_price(self, uniform_problem):
        """Four tied price pairs support p1 = 1.5; three of them at k = 1.5."""
        points = continuation_fixed_points(1.5, uniform_problem)

        assert len(points) == 4
        assert points[0].k == pytest.approx(1.5)
        assert points[0].seller_value == pytest.approx(21 / 41 * 1.5 + 1.0)
        assert sum(p.k == pytest.approx(1.5) for p in points) == 3
        assert [p.seller_value for p in points] == sorted((p.seller_value for p in points), reverse=True)

    def test_seller_value_curve(self, uniform_problem):
        curve = seller_value_curve(uniform_problem, p1_grid=[1.0, 1.5])

        assert curve[0].value == pytest.approx(2.0)
        assert curve[1].value == pytest.approx(21 / 41 * 1.5 + 1.0)
        assert curve[1].n_fixed_points == 4

    def test_fixed_points_keep_the_ratchet(self, gaussian_problem):
        """Under strict MLRP every continuation at the chosen price has p_A >= p_R."""
        outcome = solve_pbe_star(gaussian_problem)
        points = continuation_fixed_points(outcome.p1, gaussian_problem)

        assert points
        assert all(p.p_A >= p.p_R for p in points)

    def test_strict_mode_refuses_bad_instances(self):
        """Perfect correlation breaks the Lipschitz condition."""
        grid = make_uniform(1.0, 2.0, 11)
        problem = PricingProblem.baseline(grid, perfect_correlation_kernel(grid), 1.0)

        with pytest.raises(AssumptionViolatedError) as exc_info:
            solve_pbe_star(problem, strict=True)
        assert exc_info.value.reports


# ============================================================================
# TEST SUITE 2: Verification
# ============================================================================


class TestVerification:
    """Test suite for the independent equilibrium re-check."""

    @pytest.mark.parametrize("fixture", ["uniform_problem", "gaussian_problem"])
    def test_solver_output_verifies(self, fixture, request):
        problem = request.getfixturevalue(fixture)
        report = verify_equilibrium(solve_pbe_star(problem), problem)

        assert report.passed
        assert report.max_violation <= 1e-9

    def test_wrong_revenue_is_caught(self, uniform_problem):
        outcome = solve_pbe_star(uniform_problem)
        tampered = outcome.model_copy(update={"revenue": outcome.revenue + 0.1})
        report = verify_equilibrium(tampered, uniform_problem)

        assert not report.passed
        assert report.checks["revenue"] == pytest.approx(0.1)

    def test_non_monopoly_price_is_caught(self, uniform_problem):
        outcome = solve_pbe_star(uniform_problem)
        tampered = outcome.model_copy(update={"p_A": 1.5})
        report = verify_equilibrium(tampered, uniform_problem)

        assert not report.passed
        assert report.checks["seller_accept"] > 0
        assert any(f.startswith("seller_accept") for f in report.failures)

    def test_mass_tolerance_marks_histories_off_path(self, gaussian_problem):
        """Treating every history as off path contradicts the reported posteriors."""
        outcome = solve_pbe_star(gaussian_problem)
        report = verify_equilibrium(outcome, gaussian_problem, mass_tol=1.0)

        assert not report.passed
        assert any(f.startswith("beliefs") for f in report.failures)


# ============================================================================
# TEST SUITE 3: Finite Games
# ============================================================================


class TestDiscreteGames:
    """Test suite for exhaustive enumeration on small games."""

    def test_enumeration_matches_solver(self):
        """On a 4-point instance the enumerator and the solver agree on the best revenue."""
        scenario = bundled("example1_tiny")
        game = build_game(scenario)
        problem = build_problem(scenario)

        outcomes = enumerate_discrete(game)
        outcome = solve_pbe_star(problem, p1_grid=game.prices)

        assert outcomes[0].revenue == pytest.approx(2.0)
        assert outcome.revenue == pytest.approx(outcomes[0].revenue)

    def test_negative_correlation_escapes_benchmark(self):
        """Anti-correlated values: some equilibrium earns 2.5 against a benchmark of 2."""
        game = build_game(bundled("ex3_negative"))

        assert discrete_posting_benchmark(game).revenue == pytest.approx(2.0)
        outcomes = enumerate_discrete(game, tie_rule=TieRule.EITHER)
        assert outcomes[0].revenue >= 2.5 - 1e-9

    def test_substitutes_escape_benchmark(self):
        """A purchase lowering next period's value lets the seller earn 1.25 against 1."""
        game = build_game(bundled("ex4_substitutes"))
        outcomes = enumerate_discrete(game)
        profile = find_profile(outcomes, 1.0, 0.5, 1.0)

        assert discrete_posting_benchmark(game).revenue == pytest.approx(1.0)
        assert profile
        assert profile[0].revenue == pytest.approx(1.25)

    def test_off_path_beliefs_filter_profiles(self):
        """(1.5, 1, 2) survives only when off-path beliefs are unrestricted."""
        game = build_game(bundled("ex2_d1"))

        loose = enumerate_discrete(game, belief_rule=BeliefRule.UNRESTRICTED)
        strict = enumerate_discrete(game, belief_rule=BeliefRule.PBE_STAR)

        assert find_profile(loose, 1.5, 1.0, 2.0)
        assert not find_profile(strict, 1.5, 1.0, 2.0)

    def test_size_limit(self):
        values = [float(v) for v in range(1, 10)]
        pmf = [[1.0 / 81] * 9 for _ in range(9)]
        game = DiscreteGame(theta1=values, theta2=values, pmf=pmf)

        with pytest.raises(SizeLimitExceededError):
            enumerate_discrete(game)

    def test_game_validation(self):
        with pytest.raises(ValidationError):
            DiscreteGame(theta1=[1.0, 2.0], theta2=[1.0, 2.0], pmf=[[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(ValidationError):
            DiscreteGame(theta1=[1.0], theta2=[1.0], pmf=[[1.0]], colour="red")

    def test_kappa_moves_purchase_kernel(self):
        problem = problem_from_game(build_game(bundled("ex4_substitutes")))

        assert problem.complements
        assert problem.kernel_accept.to_grid.points.tolist() == pytest.approx([-0.5, 0.5])

    def test_complements_do_not_convert_to_games(self):
        problem = problem_from_game(build_game(bundled("ex4_substitutes")))
        with pytest.raises(InvalidInputError):
            game_from_problem(problem)
