"""
Unit tests for buyer and seller primitives: monopoly pricing, the buyer's
threshold rule, committed triples and the posting benchmark.
"""

import numpy as np
import pytest

from ratchet_pricing.dist_core import make_discrete, make_uniform
from ratchet_pricing.exceptions import InvalidInputError
from ratchet_pricing.pricing import (
    buyer_accepts,
    evaluate_commitment,
    h_function,
    monopoly_price,
    monopoly_prices,
    no_sale_price,
    posting_price,
    static_posting_benchmark,
    threshold_from_prices,
)

# ============================================================================
# TEST SUITE 1: Monopoly Pricing
# ============================================================================


class TestMonopolyPricing:
    """Test suite for one-period revenue maximization."""

    def test_ties_go_to_lowest_price(self):
        """Prices 1 and 2 both earn 1 on a fair coin; the lower one is posted."""
        grid = make_discrete([1.0, 2.0], [0.5, 0.5])
        result = monopoly_price(grid)

        assert result.price == 1.0
        assert result.revenue == pytest.approx(1.0)
        assert result.unique is False
        assert monopoly_prices(grid) == [1.0, 2.0]

    def test_unit_uniform(self):
        """On [0, 1] the monopoly price sits at one half."""
        grid = make_uniform(0.0, 1.0, 101)
        result = monopoly_price(grid)

        assert result.price == pytest.approx(0.5)
        assert result.revenue == pytest.approx(25.5 / 101)

    def test_shifted_uniform_sells_to_everyone(self):
        """Values on [1, 2]: posting the bottom of the support is optimal."""
        result = monopoly_price(make_uniform(1.0, 2.0, 41))

        assert result.price == pytest.approx(1.0)
        assert result.revenue == pytest.approx(1.0)

    def test_no_sale_price_is_above_support(self):
        grid = make_uniform(1.0, 2.0, 11)
        assert no_sale_price(grid) > grid.hi


# ============================================================================
# TEST SUITE 2: Buyer Threshold
# ============================================================================


class TestBuyerThreshold:
    """Test suite for the buyer's first-period decision."""

    def test_h_is_constant_under_independence(self, uniform_problem):
        """Losing the low second-period price costs the same for every type."""
        h = h_function(uniform_problem.kernel_accept, uniform_problem.kernel_reject, 2.0, 1.0)

        assert np.allclose(h, 0.5)

    def test_threshold_from_prices(self, uniform_problem):
        """At (1.9, 1, 2) the buyer gains 0.5 in option value, so the cutoff is 1.4."""
        result = threshold_from_prices(1.9, 1.0, 2.0, uniform_problem)

        assert result.k == pytest.approx(1.4)
        assert not result.all_accept
        assert not result.all_reject

    def test_everyone_accepts(self, uniform_problem):
        result = threshold_from_prices(1.5, 1.0, 2.0, uniform_problem)

        assert result.all_accept
        assert result.k_index == 0

    def test_nobody_accepts(self, uniform_problem):
        result = threshold_from_prices(5.0, 1.0, 1.0, uniform_problem)

        assert result.all_reject
        assert result.k_index == uniform_problem.prior.size

    def test_indifferent_type_accepts(self, uniform_problem):
        """The cutoff type is indifferent and counts as accepting."""
        p1 = posting_price(1.4, 1.0, 2.0, uniform_problem)

        assert p1 == pytest.approx(1.9)
        assert buyer_accepts(uniform_problem.theta1[16], p1, 1.0, 2.0, uniform_problem)
        assert not buyer_accepts(uniform_problem.theta1[15], p1, 1.0, 2.0, uniform_problem)

    def test_off_grid_type_is_rejected(self, uniform_problem):
        with pytest.raises(InvalidInputError, match="not on the first-period grid"):
            buyer_accepts(1.01, 1.5, 1.0, 1.0, uniform_problem)


# ============================================================================
# TEST SUITE 3: Seller Revenue
# ============================================================================


class TestSellerRevenue:
    """Test suite for committed triples and the posting benchmark."""

    def test_commitment_triple(self, uniform_problem):
        """(1.5, 1, 2): every type buys twice, revenue 1.5 + 1."""
        result = evaluate_commitment(1.5, 1.0, 2.0, uniform_problem)

        assert result.revenue == pytest.approx(2.5)
        assert result.all_accept

    def test_benchmark_independent_uniform(self, uniform_problem):
        """Posting the monopoly price twice earns 2."""
        benchmark = static_posting_benchmark(uniform_problem)

        assert benchmark.revenue == pytest.approx(2.0)
        assert benchmark.prices == pytest.approx([1.0, 1.0])
        assert benchmark.per_period == pytest.approx([1.0, 1.0])

    def test_benchmark_discounts_second_period(self, uniform_problem):
        benchmark = static_posting_benchmark(uniform_problem.with_delta(0.5))

        assert benchmark.revenue == pytest.approx(1.5)

    def test_benchmark_with_zero_delta(self, uniform_problem):
        """delta = 0 leaves only the first-period monopoly revenue."""
        benchmark = static_posting_benchmark(uniform_problem.with_delta(0.0))

        assert benchmark.revenue == pytest.approx(1.0)
        assert benchmark.per_period[0] == pytest.approx(1.0)
