"""
Unit tests for ratchet_pricing.dist_core and the grid types.

Covers construction of density and discrete grids, kernels, conditioning
and the expectation helpers every solver builds on.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from ratchet_pricing.dist_core import (
    Condition,
    Side,
    compose,
    gaussian_ar1,
    grid_from_cdf,
    independent_kernel,
    kernel_from_ar1,
    kernel_from_table,
    make_discrete,
    make_truncated_normal,
    make_uniform,
    marginal,
    partial_expectation,
    partial_expectation_table,
    perfect_correlation_kernel,
    posterior,
    shift_grid,
    split_mass,
    survival_table,
    truncate,
)
from ratchet_pricing.domain.distributions import GridKind, TypeGrid
from ratchet_pricing.exceptions import (
    EmptyEventError,
    EmptyTruncationError,
    GridMismatchError,
    InvalidBoundsError,
    InvalidInputError,
)

# ============================================================================
# TEST SUITE 1: Grid Construction
# ============================================================================


class TestGridConstruction:
    """Test suite for density and discrete grid constructors."""

    def test_uniform_grid_cells(self):
        """Uniform cells carry equal mass and tile the interval."""
        grid = make_uniform(1.0, 2.0, 5)

        assert grid.kind == GridKind.DENSITY
        assert grid.size == 5
        assert np.allclose(grid.weights, 0.2)
        assert grid.edges[0] == pytest.approx(1.0)
        assert grid.edges[-1] == pytest.approx(2.0)
        assert grid.cdf(1.5) == pytest.approx(0.5)

    def test_uniform_rejects_bad_bounds(self):
        """lo must lie below hi."""
        with pytest.raises(InvalidBoundsError, match="lo < hi"):
            make_uniform(2.0, 1.0, 5)

    def test_truncated_normal_is_symmetric(self):
        """A centred truncated normal keeps its mean."""
        grid = make_truncated_normal(0.0, 1.0, 201)

        assert grid.mean() == pytest.approx(0.0, abs=1e-9)
        assert grid.weights.sum() == pytest.approx(1.0)
        assert grid.lo == pytest.approx(-5.0)

    def test_truncated_normal_rejects_zero_sigma(self):
        with pytest.raises(InvalidBoundsError):
            make_truncated_normal(0.0, 0.0, 11)

    def test_discrete_weights_must_sum_to_one(self):
        """Discrete distributions are not silently renormalized."""
        with pytest.raises(InvalidInputError, match="sum"):
            make_discrete([1.0, 2.0], [0.5, 0.6])

    def test_type_grid_validates_order(self):
        """TypeGrid refuses points that are not strictly ascending."""
        with pytest.raises(ValidationError):
            TypeGrid(points=[2.0, 1.0], weights=[0.5, 0.5])

    def test_discrete_cdf_is_right_continuous(self):
        grid = make_discrete([1.0, 2.0], [0.25, 0.75])

        assert grid.cdf(1.0) == pytest.approx(0.25)
        assert grid.cdf(1.999) == pytest.approx(0.25)
        assert grid.cdf(2.0) == pytest.approx(1.0)

    def test_grid_from_cdf(self):
        """A linear cdf reproduces the uniform grid."""
        grid = grid_from_cdf(0.0, 1.0, 5, cdf=lambda x: x)

        assert np.allclose(grid.weights, make_uniform(0.0, 1.0, 5).weights)
        with pytest.raises(InvalidInputError):
            grid_from_cdf(0.0, 1.0, 5)

    def test_shift_keeps_masses(self):
        grid = make_discrete([1.0, 2.0], [0.5, 0.5])
        shifted = shift_grid(grid, -1.5)

        assert shifted.points.tolist() == pytest.approx([-0.5, 0.5])
        assert shifted.weights.tolist() == pytest.approx([0.5, 0.5])


# ============================================================================
# TEST SUITE 2: Kernels
# ============================================================================


class TestKernels:
    """Test suite for Markov kernel builders."""

    def test_ar1_rows_are_distributions(self):
        """Every AR(1) row sums to one and conditional means rise with theta1."""
        prior = make_truncated_normal(2.0, 0.5, 41, 4.0)
        kernel = kernel_from_ar1(gaussian_ar1(0.5, 1.0, 0.5, 41, 4.0), prior, 41)

        assert np.allclose(kernel.rows.sum(axis=1), 1.0)
        means = kernel.conditional_means()
        assert np.all(np.diff(means) > 0)

    def test_ar1_conditional_mean_slope(self):
        """E[theta2 | theta1] moves by alpha per unit of theta1 away from the edges."""
        prior = make_truncated_normal(2.0, 0.5, 81, 4.0)
        kernel = kernel_from_ar1(gaussian_ar1(0.5, 1.0, 0.5, 201, 4.0), prior, 201)
        means = kernel.conditional_means()
        theta = prior.points

        slope = (means[60] - means[20]) / (theta[60] - theta[20])
        assert slope == pytest.approx(0.5, abs=0.02)

    def test_independent_kernel_marginal(self):
        """An independent kernel's marginal is the second-period law itself."""
        prior = make_uniform(1.0, 2.0, 11)
        second = make_uniform(0.0, 1.0, 7)
        kernel = independent_kernel(prior, second)

        assert np.allclose(marginal(prior, kernel).weights, second.weights)

    def test_table_kernel_shape_mismatch(self):
        prior = make_discrete([1.0, 2.0], [0.5, 0.5])
        with pytest.raises(GridMismatchError):
            kernel_from_table(prior, [1.0, 2.0], [[0.5, 0.5]])

    def test_compose_perfect_correlation(self):
        """Composing the identity kernel with itself gives the identity."""
        grid = make_uniform(1.0, 2.0, 6)
        identity = perfect_correlation_kernel(grid)

        assert np.allclose(compose(identity, identity).rows, np.eye(6))

    def test_compose_grid_mismatch(self):
        a = perfect_correlation_kernel(make_uniform(1.0, 2.0, 6))
        b = perfect_correlation_kernel(make_uniform(1.0, 2.0, 7))
        with pytest.raises(GridMismatchError):
            compose(a, b)


# ============================================================================
# TEST SUITE 3: Conditioning and Expectations
# ============================================================================


class TestConditioning:
    """Test suite for truncation, posteriors and option values."""

    def test_truncate_upper_side_keeps_cutoff(self):
        """The cutoff point itself belongs to the upper side."""
        grid = make_discrete([1.0, 2.0, 3.0, 4.0], [0.25, 0.25, 0.25, 0.25])
        upper = truncate(grid, 2.0, Side.GEQ)
        lower = truncate(grid, 2.0, Side.LT)

        assert upper.points.tolist() == [2.0, 3.0, 4.0]
        assert np.allclose(upper.weights, 1.0 / 3.0)
        assert lower.points.tolist() == [1.0]
        assert split_mass(grid, 2.0) == pytest.approx(0.75)

    def test_truncate_empty_side(self):
        grid = make_discrete([1.0, 2.0], [0.5, 0.5])
        with pytest.raises(EmptyTruncationError):
            truncate(grid, 5.0, Side.GEQ)

    def test_posterior_point_event(self):
        """Conditioning on theta1 equal to a support point returns that row."""
        prior = make_discrete([1.0, 2.0], [0.5, 0.5])
        kernel = kernel_from_table(prior, [1.0, 2.0], [[0.9, 0.1], [0.2, 0.8]])

        row = posterior(kernel, prior, Condition.EQ, 2.0)
        assert row.weights.tolist() == pytest.approx([0.2, 0.8])

        with pytest.raises(EmptyEventError):
            posterior(kernel, prior, Condition.EQ, 1.5)

    def test_posterior_mixes_rows(self):
        prior = make_discrete([1.0, 2.0, 3.0], [0.2, 0.3, 0.5])
        kernel = kernel_from_table(prior, [0.0, 1.0], [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])

        upper = posterior(kernel, prior, Condition.GEQ, 2.0)
        # (0.3*[.5,.5] + 0.5*[0,1]) / 0.8
        assert upper.weights.tolist() == pytest.approx([0.1875, 0.8125])

    def test_partial_expectation(self):
        """E[(theta - p)+] on a two-point law."""
        grid = make_discrete([1.0, 2.0], [0.5, 0.5])

        assert partial_expectation(grid, 1.5) == pytest.approx(0.25)
        assert partial_expectation(grid, 0.0) == pytest.approx(1.5)
        assert partial_expectation(grid, 3.0) == 0.0

    def test_tables_agree_with_rows(self):
        """Vectorized option and survival tables match row-by-row evaluation."""
        prior = make_discrete([1.0, 2.0], [0.5, 0.5])
        kernel = kernel_from_table(prior, [1.0, 2.0, 3.0], [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])
        prices = np.array([1.0, 2.5])

        option = partial_expectation_table(kernel, prices)
        survival = survival_table(kernel, prices)
        for i in range(2):
            for j, p in enumerate(prices):
                assert option[i, j] == pytest.approx(partial_expectation(kernel.row(i), p))
                assert survival[i, j] == pytest.approx(kernel.row(i).survival(p))
