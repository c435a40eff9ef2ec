"""Equilibrium solvers: two-period PBE-star, finite-game enumeration and multi-period play"""

from .discrete import (
    discrete_posting_benchmark,
    enumerate_discrete,
    find_profile,
    game_from_problem,
    problem_from_game,
)
from .multi_period import (
    build_kernels,
    multi_period_benchmark,
    solve_multi_period,
    two_period_problem,
)
from .two_period import (
    continuation_fixed_points,
    cutoff_posteriors,
    seller_value_curve,
    solve_pbe_star,
)
from .verification import verify_equilibrium

__all__ = [
    # Two periods
    "solve_pbe_star",
    "continuation_fixed_points",
    "cutoff_posteriors",
    "seller_value_curve",
    "verify_equilibrium",
    # Finite games
    "enumerate_discrete",
    "find_profile",
    "discrete_posting_benchmark",
    "problem_from_game",
    "game_from_problem",
    # Multi-period
    "solve_multi_period",
    "multi_period_benchmark",
    "build_kernels",
    "two_period_problem",
]
