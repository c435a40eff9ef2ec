"""
Pytest configuration file.

This file ensures that the project root is in the Python path,
allowing tests to import the ratchet_pricing package, and provides the
small instances most test suites share.
"""

import sys
from pathlib import Path

import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from ratchet_pricing.dist_core import (  # noqa: E402
    gaussian_ar1,
    independent_kernel,
    kernel_from_ar1,
    make_truncated_normal,
    make_uniform,
)
from ratchet_pricing.domain.problem import PricingProblem  # noqa: E402


@pytest.fixture
def uniform_problem() -> PricingProblem:
    """Independent U[1, 2] values on 41 points, no discounting."""
    prior = make_uniform(1.0, 2.0, 41)
    kernel = independent_kernel(prior, make_uniform(1.0, 2.0, 41))
    return PricingProblem.baseline(prior, kernel, 1.0, name="uniform")


@pytest.fixture
def gaussian_problem() -> PricingProblem:
    """Gaussian AR(1) with slope 0.5 on 61 points."""
    prior = make_truncated_normal(2.0, 0.5, 61, 4.0)
    kernel = kernel_from_ar1(gaussian_ar1(0.5, 1.0, 0.5, 61, 4.0), prior, 61)
    return PricingProblem.baseline(prior, kernel, 1.0, name="gaussian")
