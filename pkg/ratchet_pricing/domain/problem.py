from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ratchet_pricing.domain.distributions import Ar1Spec, MarkovKernel, TypeGrid


def _same_points(a: TypeGrid, b: TypeGrid) -> bool:
    return a.size == b.size and bool(np.allclose(a.points, b.points, rtol=0, atol=1e-12))


class PricingProblem(BaseModel):
    """
    Two-period instance.

    kernel_accept is the law of theta2 given theta1 after a first-period
    purchase (x1 = 1), kernel_reject after no purchase (x1 = 0). In the
    baseline model both are the same kernel.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    prior: TypeGrid
    kernel_accept: MarkovKernel
    kernel_reject: MarkovKernel
    delta: float = Field(..., ge=0.0, le=1.0)
    name: str = ""

    @model_validator(mode="after")
    def check_grids(self):
        for label, kernel in (("accept", self.kernel_accept), ("reject", self.kernel_reject)):
            if not _same_points(kernel.from_grid, self.prior):
                raise ValueError(f"{label} kernel is not defined on the prior's support")
        return self

    @classmethod
    def baseline(cls, prior: TypeGrid, kernel: MarkovKernel, delta: float, name: str = "") -> "PricingProblem":
        return cls(prior=prior, kernel_accept=kernel, kernel_reject=kernel, delta=delta, name=name)

    @property
    def complements(self) -> bool:
        return self.kernel_accept is not self.kernel_reject

    @property
    def shared_to_grid(self) -> bool:
        return _same_points(self.kernel_accept.to_grid, self.kernel_reject.to_grid)

    @property
    def theta1(self) -> np.ndarray:
        return self.prior.points

    def kernel_for(self, x1: int) -> MarkovKernel:
        return self.kernel_accept if x1 == 1 else self.kernel_reject

    def with_delta(self, delta: float) -> "PricingProblem":
        return self.model_copy(update={"delta": delta})


class MultiPeriodProblem(BaseModel):
    """T-period AR(1) instance: prior over theta1 and one step per later period."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    prior: TypeGrid
    steps: List[Ar1Spec] = Field(..., min_length=1)
    delta: float = Field(..., gt=0.0, le=1.0)
    n_theta: int = Field(101, ge=2)
    name: str = ""
    kernels: Optional[List[MarkovKernel]] = Field(
        None, description="Pre-built per-period kernels; built from steps when omitted"
    )

    @property
    def periods(self) -> int:
        return len(self.steps) + 1
