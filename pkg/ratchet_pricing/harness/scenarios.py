"""
Scenario files: a strict JSON schema for problem instances and the builders
that turn a validated scenario into solver inputs.
"""

import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ratchet_pricing.config import (
    MASS_TOL,
    N_PRICE,
    N_THETA,
    N_THETA_MULTI,
    NORMAL_WIDTH,
    REVENUE_STEPS,
    SEED,
    STRICT_TOL,
)
from ratchet_pricing.dist_core import (
    ar1_to_grid,
    gaussian_ar1,
    independent_kernel,
    kernel_from_ar1,
    kernel_from_table,
    make_discrete,
    make_truncated_normal,
    make_uniform,
    perfect_correlation_kernel,
    point_mass,
    with_x1_tag,
)
from ratchet_pricing.domain.distributions import Ar1Spec, MarkovKernel, TypeGrid
from ratchet_pricing.domain.games import BeliefRule, DiscreteGame, TieRule
from ratchet_pricing.domain.problem import MultiPeriodProblem, PricingProblem
from ratchet_pricing.domain.results import AssumptionReport
from ratchet_pricing.exceptions import InvalidInputError, ScenarioParseError, ScenarioValidationError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelKind(str, Enum):
    TWO_PERIOD = "two_period"
    COMPLEMENTS = "complements"
    MULTI_PERIOD = "multi_period"
    DISCRETE = "discrete"


# ---------------------------------------------------------------------------
# Distribution specs
# ---------------------------------------------------------------------------


class UniformSpec(_Strict):
    lo: float
    hi: float


class NormalSpec(_Strict):
    mu: float
    sigma: float = Field(..., gt=0.0)
    width: float = Field(NORMAL_WIDTH, gt=0.0, description="Truncation half-width in standard deviations")


class DiscreteSpec(_Strict):
    points: List[float] = Field(..., min_length=1)
    weights: List[float] = Field(..., min_length=1)


class DistributionSpec(_Strict):
    """Exactly one of the families."""

    uniform: Optional[UniformSpec] = None
    normal: Optional[NormalSpec] = None
    discrete: Optional[DiscreteSpec] = None
    point: Optional[float] = None

    @model_validator(mode="after")
    def one_family(self):
        given = [k for k in ("uniform", "normal", "discrete", "point") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError(f"give exactly one of uniform, normal, discrete, point (got {given or 'none'})")
        return self


class Ar1Step(_Strict):
    """
    theta' = alpha*theta + eps.

    With stationary=true and a normal prior, eps is chosen so theta' has the
    prior's law: N((1 - alpha)*mu, sigma^2*(1 - alpha^2)).
    """

    alpha: float
    noise: Optional[DistributionSpec] = None
    stationary: bool = False

    @model_validator(mode="after")
    def noise_or_stationary(self):
        if self.noise is None and not self.stationary:
            raise ValueError("an AR(1) step needs a noise distribution or stationary=true")
        return self


class TableSpec(_Strict):
    points: List[float] = Field(..., min_length=1, description="theta2 support")
    rows: List[List[float]] = Field(..., min_length=1)


class KernelSpec(_Strict):
    ar1: Optional[Ar1Step] = None
    table: Optional[TableSpec] = None
    independent: Optional[DistributionSpec] = None
    perfect_correlation: bool = False

    @model_validator(mode="after")
    def one_kind(self):
        given = [k for k in ("ar1", "table", "independent") if getattr(self, k) is not None]
        if self.perfect_correlation:
            given.append("perfect_correlation")
        if len(given) != 1:
            raise ValueError(f"give exactly one kernel kind (got {given or 'none'})")
        return self


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------


class Grids(_Strict):
    n_theta: Optional[int] = Field(None, ge=2, description="Type points; model default when omitted")
    n_price: int = Field(N_PRICE, ge=2)


class Tolerances(_Strict):
    mass: float = Field(MASS_TOL, gt=0.0, description="Histories with no more prior mass are off path")
    strictness: float = Field(STRICT_TOL, gt=0.0, description="Slack an assumption check must clear")
    revenue_steps: float = Field(REVENUE_STEPS, ge=0.0, description="Revenue tolerance in price-grid steps")


class EnumerationSpec(_Strict):
    tie_rule: TieRule = TieRule.ACCEPT
    belief_rule: BeliefRule = BeliefRule.PBE_STAR


class Scenario(_Strict):
    name: str = ""
    description: str = ""
    model: ModelKind
    delta: float = Field(..., gt=0.0, le=1.0)
    prior: Optional[DistributionSpec] = None
    kernel: Optional[KernelSpec] = None
    kernel_accept: Optional[KernelSpec] = None
    kernel_reject: Optional[KernelSpec] = None
    steps: List[Ar1Step] = Field(default_factory=list)
    game: Optional[DiscreteGame] = Field(None, description="Finite game; its delta is taken from the scenario")
    enumeration: EnumerationSpec = Field(default_factory=EnumerationSpec)
    grids: Grids = Field(default_factory=Grids)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    seed: int = SEED

    @model_validator(mode="after")
    def model_fields_present(self):
        required = {
            ModelKind.TWO_PERIOD: ("prior", "kernel"),
            ModelKind.COMPLEMENTS: ("prior", "kernel_accept", "kernel_reject"),
            ModelKind.MULTI_PERIOD: ("prior", "steps"),
            ModelKind.DISCRETE: ("game",),
        }[self.model]
        missing = [f for f in required if not getattr(self, f)]
        if missing:
            raise ValueError(f"model '{self.model.value}' needs {', '.join(missing)}")
        return self

    @property
    def n_theta(self) -> int:
        if self.grids.n_theta is not None:
            return self.grids.n_theta
        return N_THETA_MULTI if self.model == ModelKind.MULTI_PERIOD else N_THETA

    def with_grid(self, n: int) -> "Scenario":
        return self.model_copy(update={"grids": Grids(n_theta=n, n_price=n)})

    def with_seed(self, seed: int) -> "Scenario":
        return self.model_copy(update={"seed": seed})


class SweepSpec(_Strict):
    parameter: str = Field(..., description="Dotted path into the scenario, e.g. kernel.ar1.alpha")
    values: List[float] = Field(..., min_length=1)
    outputs: List[str] = Field(default_factory=lambda: ["benchmark", "commitment", "equilibrium"])

    @model_validator(mode="after")
    def known_outputs(self):
        unknown = set(self.outputs) - {"benchmark", "commitment", "equilibrium"}
        if unknown:
            raise ValueError(f"unknown sweep outputs: {sorted(unknown)}")
        return self


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def _field_path(error: ValidationError) -> str:
    first = error.errors()[0]
    return ".".join(str(part) for part in first["loc"])


def _read_json(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with Path(path).open("r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        logger.error(f"Scenario file not found: {path}")
        raise ScenarioParseError(f"no such file: {path}") from e
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON in {path}: {e}")
        raise ScenarioParseError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{path} must hold a JSON object")
    return data


def parse_scenario(data: Dict[str, Any]) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        path = _field_path(e)
        logger.error(f"Scenario validation failed at '{path}': {e.errors()[0]['msg']}")
        raise ScenarioValidationError(f"invalid scenario field '{path}': {e.errors()[0]['msg']}", path) from e


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario file; unknown keys are rejected."""
    scenario = parse_scenario(_read_json(path))
    if not scenario.name:
        scenario = scenario.model_copy(update={"name": Path(path).stem})
    logger.debug(f"Loaded scenario '{scenario.name}' ({scenario.model.value})")
    return scenario


def load_sweep(path: Union[str, Path]) -> SweepSpec:
    data = _read_json(path)
    try:
        return SweepSpec.model_validate(data)
    except ValidationError as e:
        path_ = _field_path(e)
        logger.error(f"Sweep spec validation failed at '{path_}'")
        raise ScenarioValidationError(f"invalid sweep field '{path_}': {e.errors()[0]['msg']}", path_) from e


def set_parameter(scenario: Scenario, parameter: str, value: float) -> Scenario:
    """Copy of the scenario with one dotted-path field replaced, re-validated."""
    data = scenario.model_dump(exclude_none=True)
    node: Any = data
    parts = parameter.split(".")
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ScenarioValidationError(f"sweep parameter '{parameter}' is not in the scenario", parameter)
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ScenarioValidationError(f"sweep parameter '{parameter}' is not in the scenario", parameter)
    node[parts[-1]] = value
    return parse_scenario(data)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def build_grid(spec: DistributionSpec, n: int) -> TypeGrid:
    if spec.uniform is not None:
        return make_uniform(spec.uniform.lo, spec.uniform.hi, n)
    if spec.normal is not None:
        return make_truncated_normal(spec.normal.mu, spec.normal.sigma, n, spec.normal.width)
    if spec.discrete is not None:
        return make_discrete(spec.discrete.points, spec.discrete.weights)
    return point_mass(float(spec.point))


def build_ar1(step: Ar1Step, prior: Optional[DistributionSpec], n: int) -> Ar1Spec:
    if step.stationary:
        if prior is None or prior.normal is None:
            raise InvalidInputError("a stationary AR(1) step needs a normal prior")
        if not 0.0 <= step.alpha < 1.0:
            raise InvalidInputError(f"a stationary AR(1) step needs 0 <= alpha < 1, got {step.alpha}")
        mu, sigma = prior.normal.mu, prior.normal.sigma
        return gaussian_ar1(step.alpha, (1.0 - step.alpha) * mu, sigma * np.sqrt(1.0 - step.alpha**2), n, prior.normal.width)
    noise = step.noise
    if noise.normal is not None:
        return gaussian_ar1(step.alpha, noise.normal.mu, noise.normal.sigma, n, noise.normal.width)
    return Ar1Spec(alpha=step.alpha, noise=build_grid(noise, n))


def build_kernel(
    spec: KernelSpec,
    prior: TypeGrid,
    n: int,
    prior_spec: Optional[DistributionSpec] = None,
    to_grid: Optional[TypeGrid] = None,
) -> MarkovKernel:
    if spec.ar1 is not None:
        return kernel_from_ar1(build_ar1(spec.ar1, prior_spec, n), prior, n, to_grid=to_grid)
    if spec.table is not None:
        return kernel_from_table(prior, spec.table.points, spec.table.rows)
    if spec.independent is not None:
        return independent_kernel(prior, build_grid(spec.independent, n))
    return perfect_correlation_kernel(prior)


def _shared_ar1_grid(scenario: Scenario, prior: TypeGrid) -> Optional[TypeGrid]:
    """One to-grid covering both AR(1) kernels of a complements scenario."""
    specs = (scenario.kernel_accept, scenario.kernel_reject)
    if any(s.ar1 is None for s in specs):
        return None
    n = scenario.n_theta
    grids = [ar1_to_grid(build_ar1(s.ar1, scenario.prior, n), prior, n) for s in specs]
    return make_uniform(min(g.lo for g in grids), max(g.hi for g in grids), n)


def build_game(scenario: Scenario) -> DiscreteGame:
    if scenario.model == ModelKind.DISCRETE:
        return scenario.game.model_copy(update={"delta": scenario.delta, "name": scenario.name or scenario.game.name})
    from ratchet_pricing.equilibrium.discrete import game_from_problem

    return game_from_problem(build_problem(scenario))


def build_problem(scenario: Scenario) -> PricingProblem:
    """Two-period instance for two_period, complements and discrete scenarios."""
    if scenario.model == ModelKind.DISCRETE:
        from ratchet_pricing.equilibrium.discrete import problem_from_game

        return problem_from_game(build_game(scenario))
    if scenario.model == ModelKind.MULTI_PERIOD:
        from ratchet_pricing.equilibrium.multi_period import two_period_problem

        return two_period_problem(build_multi_period(scenario))

    n = scenario.n_theta
    prior = build_grid(scenario.prior, n)
    if scenario.model == ModelKind.TWO_PERIOD:
        kernel = build_kernel(scenario.kernel, prior, n, scenario.prior)
        return PricingProblem.baseline(prior, kernel, scenario.delta, name=scenario.name)

    shared = _shared_ar1_grid(scenario, prior)
    accept = build_kernel(scenario.kernel_accept, prior, n, scenario.prior, to_grid=shared)
    reject = build_kernel(scenario.kernel_reject, prior, n, scenario.prior, to_grid=shared)
    return PricingProblem(
        prior=prior,
        kernel_accept=with_x1_tag(accept, 1),
        kernel_reject=with_x1_tag(reject, 0),
        delta=scenario.delta,
        name=scenario.name,
    )


def build_multi_period(scenario: Scenario) -> MultiPeriodProblem:
    if scenario.model != ModelKind.MULTI_PERIOD:
        raise InvalidInputError(f"scenario '{scenario.name}' is not a multi-period model")
    n = scenario.n_theta
    return MultiPeriodProblem(
        prior=build_grid(scenario.prior, n),
        steps=[build_ar1(step, scenario.prior, n) for step in scenario.steps],
        delta=scenario.delta,
        n_theta=n,
        name=scenario.name,
    )


def check_scenario(scenario: Scenario) -> List[AssumptionReport]:
    """Assumption reports for whichever model the scenario describes."""
    from ratchet_pricing.assumptions import check_ar1_chain, check_problem

    if scenario.model == ModelKind.MULTI_PERIOD:
        problem = build_multi_period(scenario)
        return check_ar1_chain(problem.prior, problem.steps, problem.delta, tol=scenario.tolerances.strictness)
    return check_problem(build_problem(scenario), tol=scenario.tolerances.strictness)


# ---------------------------------------------------------------------------
# Randomized instances
# ---------------------------------------------------------------------------


def random_instances(seed: int, count: int, n: int, delta: float = 1.0) -> List[Scenario]:
    """
    Seeded AR(1) scenarios with truncated-normal prior and innovations and
    alpha drawn in (0, 1/delta). The seed is kept on every scenario.
    """
    rng = np.random.default_rng(seed)
    scenarios = []
    for i in range(count):
        mu = float(rng.uniform(1.0, 3.0))
        sigma = float(rng.uniform(0.3, 1.0))
        alpha = float(rng.uniform(0.05, 0.95)) / delta
        noise_mu = float(rng.uniform(0.0, 1.0))
        noise_sigma = float(rng.uniform(0.3, 1.0))
        scenarios.append(
            Scenario(
                name=f"random-{seed}-{i}",
                model=ModelKind.TWO_PERIOD,
                delta=delta,
                prior=DistributionSpec(normal=NormalSpec(mu=mu, sigma=sigma, width=3.0)),
                kernel=KernelSpec(
                    ar1=Ar1Step(
                        alpha=alpha,
                        noise=DistributionSpec(normal=NormalSpec(mu=noise_mu, sigma=noise_sigma, width=3.0)),
                    )
                ),
                grids=Grids(n_theta=n, n_price=n),
                seed=seed,
            )
        )
    logger.debug(f"Generated {count} random instances from seed {seed}")
    return scenarios
