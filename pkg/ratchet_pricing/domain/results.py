"""
Result types returned by the solvers and checkers.

Everything except VirtualValueTable holds plain floats and lists so it can be
dumped straight to JSON by the command layer.
"""

from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class AssumptionName(str, Enum):
    MLRP = "mlrp"
    LIPSCHITZ = "lipschitz"
    REGULARITY = "regularity"
    MLRP_X = "mlrp_x"
    LIPSCHITZ_X = "lipschitz_x"
    REGULARITY_X = "regularity_x"
    COMPLEMENT = "complement"
    LOG_CONCAVE_AR1 = "log_concave_ar1"
    MONOTONE_HAZARD = "monotone_hazard"
    FIRST_ORDER_DOMINANCE = "first_order_dominance"
    AR1_SLOPE = "ar1_slope"


class Witness(BaseModel):
    index: List[int]
    value: float


class AssumptionReport(BaseModel):
    name: AssumptionName
    holds: bool
    witnesses: List[Witness] = Field(default_factory=list)
    margin: float = 0.0
    detail: str = ""

    @model_validator(mode="after")
    def holds_matches_witnesses(self):
        if self.holds != (len(self.witnesses) == 0):
            raise ValueError("holds must be true exactly when there are no witnesses")
        return self

    def to_json_dict(self) -> dict:
        return {
            "name": self.name.value,
            "holds": self.holds,
            "margin": self.margin,
            "witnesses": [w.model_dump() for w in self.witnesses[:10]],
        }


class MonopolyResult(BaseModel):
    price: float
    revenue: float
    unique: bool = True


class ThresholdResult(BaseModel):
    k: float
    k_index: int = Field(..., description="First accepting grid index; n when nobody accepts")
    all_accept: bool = False
    all_reject: bool = False
    crossing_gap: float = 0.0

    @model_validator(mode="after")
    def one_configuration(self):
        if self.all_accept and self.all_reject:
            raise ValueError("a threshold cannot be both all-accept and all-reject")
        return self


class VirtualValueTable(BaseModel):
    """First and second-period virtual values on the product grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    phi: np.ndarray
    hazard: np.ndarray
    psi: np.ndarray
    impulse: np.ndarray
    valid: np.ndarray = Field(..., description="Cells where the impulse response is well defined")
    x1: Optional[int] = None


class RelaxedSolution(BaseModel):
    k: float
    p_A: float
    p_R: float
    value: float
    collapse: bool
    certified: bool = True
    boundary_curve: List[float] = Field(default_factory=list)
    k_index: int = 0
    sells_nothing: bool = False

    @model_validator(mode="after")
    def ordered_prices(self):
        if self.p_A < self.p_R:
            raise ValueError(f"relaxed optimum has p_A={self.p_A} < p_R={self.p_R}")
        return self


class DiagonalCertificate(BaseModel):
    k: float
    p2: float
    diagonal_value: float
    off_diagonal_value: float
    gap: float


class CommitmentResult(BaseModel):
    p1: float
    p_A: float
    p_R: float
    revenue: float
    k: float
    all_accept: bool = False
    all_reject: bool = False


class FixedPoint(BaseModel):
    k: float
    k_index: int
    p_A: float
    p_R: float
    seller_value: float


class SellerValuePoint(BaseModel):
    p1: float
    value: Optional[float] = None
    n_fixed_points: int = 0


class BeliefSummary(BaseModel):
    history: str
    kind: str = Field(..., description="'posterior' on path, 'point' for the off-path rule")
    mass: float
    mean: float
    lo: float
    hi: float


class EquilibriumOutcome(BaseModel):
    p1: float
    k: float
    p_A: float
    p_R: float
    revenue: float
    buyer_value: List[float] = Field(default_factory=list)
    beliefs: List[BeliefSummary] = Field(default_factory=list)
    refinement: str = "pbe-star"
    acceptance: List[bool] = Field(default_factory=list)
    tie_sensitive: bool = False
    no_fixed_point_prices: List[float] = Field(default_factory=list)


class VerificationReport(BaseModel):
    passed: bool
    max_violation: float
    checks: Dict[str, float] = Field(default_factory=dict)
    failures: List[str] = Field(default_factory=list)


class HistoryNode(BaseModel):
    history: str = Field(..., description="Purchase record so far, e.g. 'AR'")
    period: int
    price: float
    commit: bool
    k: Optional[float] = None
    mass: float
    belief_mean: float
    value: float = Field(..., description="Seller continuation revenue at this node")
    commit_value: float = Field(..., description="Revenue from committing to this belief's monopoly prices")
    equivalence_gap: float = Field(0.0, description="Value minus the value of posting the marginal monopoly prices")
    set_value: Optional[float] = Field(None, description="Best revenue from posting this period's price only")
    set_k: Optional[float] = None
    set_price: Optional[float] = None
    set_prices_accept: List[float] = Field(default_factory=list)
    set_prices_reject: List[float] = Field(default_factory=list)
    u_accept: List[float] = Field(default_factory=list, description="Buyer continuation after a purchase, per type")
    u_reject: List[float] = Field(default_factory=list, description="Buyer continuation after no purchase, per type")


class MultiPeriodOutcome(BaseModel):
    periods: int
    revenue: float
    benchmark: float
    monopoly_prices: List[float]
    equivalence_gap: float
    nodes: List[HistoryNode]
    prices_monotone: bool
    continuation_slack: float = Field(0.0, description="Worst departure of U^A, U^R from nondecreasing 1-Lipschitz")
    commit_option: bool = True


class BenchmarkResult(BaseModel):
    """Revenue from posting every period's price in advance."""

    prices: List[float]
    revenue: float
    per_period: List[float] = Field(default_factory=list)
