"""
Finite two-period games for exhaustive equilibrium enumeration.

Utility is theta1*x1 + delta*(theta2 + kappa(theta1, theta2)*x1)*x2, so kappa
shifts the second-period value after a first-period purchase (negative for
substitutes, positive for complements).

The joint law is given either as a pmf table or as a marginal over theta1 and
a transition table. Transitions are needed for first-period types with zero
mass, which off-path beliefs may still put weight on.
"""

from enum import Enum
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class TieRule(str, Enum):
    """Buyer behaviour at exact first-period indifference."""

    ACCEPT = "accept"
    EITHER = "either"


class BeliefRule(str, Enum):
    """Which off-path beliefs may rationalize the seller's second-period prices."""

    PBE_STAR = "pbe_star"
    UNRESTRICTED = "unrestricted"


class DiscreteGame(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = ""
    theta1: List[float] = Field(..., min_length=1)
    theta2: List[float] = Field(..., min_length=1)
    pmf: List[List[float]] = Field(default_factory=list, description="pmf[i][j] = P(theta1_i, theta2_j)")
    marginal: Optional[List[float]] = Field(None, description="P(theta1_i), used with transition")
    transition: Optional[List[List[float]]] = Field(None, description="P(theta2_j | theta1_i)")
    prices: List[float] = Field(default_factory=list)
    delta: float = Field(1.0, ge=0.0, le=1.0)
    kappa: Union[float, List[List[float]]] = 0.0

    @field_validator("theta1", "theta2")
    @classmethod
    def ascending(cls, v: List[float]) -> List[float]:
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("type values must be strictly ascending")
        return v

    @model_validator(mode="after")
    def check_game(self):
        shape = (len(self.theta1), len(self.theta2))
        if self.transition is not None:
            trans = np.asarray(self.transition, dtype=float)
            if trans.shape != shape:
                raise ValueError(f"transition has shape {trans.shape}, expected {shape}")
            if np.any(trans < 0) or np.any(np.abs(trans.sum(axis=1) - 1.0) > 1e-9):
                raise ValueError("transition rows must be nonnegative and sum to 1")
        if not self.pmf:
            if self.marginal is None or self.transition is None:
                raise ValueError("give either pmf or both marginal and transition")
            m = np.asarray(self.marginal, dtype=float)
            if m.shape != (shape[0],):
                raise ValueError(f"marginal needs {shape[0]} entries, got {m.size}")
            self.pmf = (m[:, None] * np.asarray(self.transition, dtype=float)).tolist()
        pmf = np.asarray(self.pmf, dtype=float)
        if pmf.shape != shape:
            raise ValueError(f"pmf has shape {pmf.shape}, expected {shape}")
        if np.any(pmf < 0):
            raise ValueError("pmf entries must be nonnegative")
        if abs(pmf.sum() - 1.0) > 1e-9:
            raise ValueError(f"pmf sums to {pmf.sum()}, expected 1")
        if self.transition is None and np.any(pmf.sum(axis=1) <= 0):
            empty = [self.theta1[i] for i in np.flatnonzero(pmf.sum(axis=1) <= 0)]
            raise ValueError(f"types {empty} have zero mass and no transition row")
        if not isinstance(self.kappa, (int, float)) and np.shape(self.kappa) != shape:
            raise ValueError("kappa table must match the pmf shape")
        # Every type value (and shifted value) is a candidate price.
        values = set(self.prices) | set(self.theta1) | set(self.theta2)
        values |= set((np.asarray(self.theta2)[None, :] + self.kappa_table()).ravel().tolist())
        self.prices = sorted(float(v) for v in values)
        return self

    def pmf_table(self) -> np.ndarray:
        return np.asarray(self.pmf, dtype=float)

    def first_period_mass(self) -> np.ndarray:
        return self.pmf_table().sum(axis=1)

    def conditional_table(self) -> np.ndarray:
        """P(theta2_j | theta1_i) for every first-period type."""
        if self.transition is not None:
            return np.asarray(self.transition, dtype=float)
        pmf = self.pmf_table()
        return pmf / pmf.sum(axis=1, keepdims=True)

    def kappa_table(self) -> np.ndarray:
        shape = (len(self.theta1), len(self.theta2))
        if isinstance(self.kappa, (int, float)):
            return np.full(shape, float(self.kappa))
        return np.asarray(self.kappa, dtype=float)
