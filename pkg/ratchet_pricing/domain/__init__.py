from ratchet_pricing.domain.distributions import (
    Ar1Spec,
    GridKind,
    MarkovKernel,
    TypeGrid,
)
from ratchet_pricing.domain.games import BeliefRule, DiscreteGame, TieRule
from ratchet_pricing.domain.problem import MultiPeriodProblem, PricingProblem

__all__ = [
    "Ar1Spec",
    "BeliefRule",
    "DiscreteGame",
    "GridKind",
    "MarkovKernel",
    "MultiPeriodProblem",
    "PricingProblem",
    "TieRule",
    "TypeGrid",
]
