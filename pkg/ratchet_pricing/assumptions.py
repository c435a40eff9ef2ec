"""
Distributional assumption checks.

Each check inspects a discretized instance and returns an AssumptionReport:
holds is true exactly when no witness (grid index tuple plus the violated
quantity) was found, and margin is the smallest slack observed. Comparisons
of likelihood ratios are done in cross-product form so zero cells never get
divided by.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ratchet_pricing.config import STRICT_TOL
from ratchet_pricing.domain.distributions import Ar1Spec, GridKind, MarkovKernel, TypeGrid
from ratchet_pricing.domain.problem import PricingProblem
from ratchet_pricing.domain.results import AssumptionName, AssumptionReport, Witness
from ratchet_pricing.exceptions import GridMismatchError, InvalidInputError, UnsupportedKindError

MAX_WITNESSES = 100


def _report(
    name: AssumptionName,
    bad: np.ndarray,
    slack: np.ndarray,
    detail: str = "",
) -> AssumptionReport:
    """Build a report from a boolean violation mask and the matching slack array."""
    finite = slack[np.isfinite(slack)]
    margin = float(finite.min()) if finite.size else 0.0
    idx = np.argwhere(bad)
    if idx.shape[0] > MAX_WITNESSES:
        order = np.argsort(slack[bad])[:MAX_WITNESSES]
        idx = idx[order]
    witnesses = [Witness(index=[int(v) for v in row], value=float(slack[tuple(row)])) for row in idx]
    report = AssumptionReport(
        name=name, holds=not witnesses, witnesses=witnesses, margin=margin, detail=detail
    )
    if not report.holds:
        logger.debug(f"{name.value} fails at {int(bad.sum())} cells (margin {margin:.3e})")
    return report


def _cross_slack(upper: np.ndarray, lower: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Relative slack of upper[l+1]*lower[l] >= upper[l]*lower[l+1] per row pair.

    Returns (slack, involved_zero); comparisons touching a zero cell get +inf.
    """
    a = upper[:, 1:] * lower[:, :-1]
    b = upper[:, :-1] * lower[:, 1:]
    zero = (upper[:, 1:] == 0) | (upper[:, :-1] == 0) | (lower[:, 1:] == 0) | (lower[:, :-1] == 0)
    scale = np.maximum(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        slack = np.where(scale > 0, (a - b) / np.where(scale > 0, scale, 1.0), 0.0)
    return np.where(zero, np.inf, slack), zero


def check_mlrp(
    kernel: MarkovKernel,
    strict: bool = False,
    name: AssumptionName = AssumptionName.MLRP,
    tol: float = STRICT_TOL,
) -> AssumptionReport:
    """f(.|theta1') / f(.|theta1) increasing in theta2 for adjacent from-points."""
    f = kernel.rows
    if f.shape[0] < 2 or f.shape[1] < 2:
        return _report(name, np.zeros((0, 0), dtype=bool), np.zeros((0, 0)), "no comparable pairs")
    slack, _ = _cross_slack(f[1:], f[:-1])
    bad = slack <= tol if strict else slack < -tol
    return _report(name, bad, slack, "strict" if strict else "weak")


def check_lipschitz(
    kernel: MarkovKernel,
    delta: float,
    name: AssumptionName = AssumptionName.LIPSCHITZ,
    tol: float = STRICT_TOL,
) -> AssumptionReport:
    """
    E[theta2|theta1'] - E[theta2|theta1] < (theta1' - theta1)/delta for all pairs.

    With delta = 0 the second period carries no weight and the allowance is
    infinite, so the condition holds trivially.
    """
    if not 0.0 <= delta <= 1.0:
        raise InvalidInputError(f"delta must lie in [0, 1], got {delta}")
    theta = kernel.from_grid.points
    if delta == 0.0:
        unbounded = np.full((theta.size, theta.size), np.inf)
        return _report(name, np.zeros_like(unbounded, dtype=bool), unbounded, "delta = 0")
    means = kernel.conditional_means()
    i, j = np.triu_indices(theta.size, k=1)
    allowance = (theta[j] - theta[i]) / delta
    slack = allowance - (means[j] - means[i])
    bad = slack <= tol * np.maximum(1.0, allowance)
    pairs = np.full((theta.size, theta.size), np.inf)
    pairs[i, j] = slack
    mask = np.zeros_like(pairs, dtype=bool)
    mask[i[bad], j[bad]] = True
    return _report(name, mask, pairs)


def check_regularity(
    prior: TypeGrid,
    kernel: MarkovKernel,
    name: AssumptionName = AssumptionName.REGULARITY,
    tol: float = STRICT_TOL,
) -> AssumptionReport:
    """Second-period virtual value nondecreasing in both types on well-defined cells."""
    if prior.kind != GridKind.DENSITY:
        raise UnsupportedKindError("regularity needs a discretized-density prior")
    from ratchet_pricing.mechanism import virtual_values

    table = virtual_values(prior, kernel)
    psi, valid = table.psi, table.valid
    band = tol * np.maximum(1.0, np.abs(psi))

    d2 = psi[:, 1:] - psi[:, :-1]
    both2 = valid[:, 1:] & valid[:, :-1]
    slack2 = np.where(both2, d2 + band[:, 1:], np.inf)

    d1 = psi[1:, :] - psi[:-1, :]
    both1 = valid[1:, :] & valid[:-1, :]
    slack1 = np.where(both1, d1 + band[1:, :], np.inf)

    bad = np.concatenate([(slack1 < 0).ravel(), (slack2 < 0).ravel()])
    slack = np.concatenate([slack1.ravel(), slack2.ravel()])
    report = _report(name, bad, slack)
    # flat indices are not informative; re-express witnesses as (theta1, theta2, axis)
    witnesses = []
    n1 = slack1.size
    for w in report.witnesses:
        flat = w.index[0]
        if flat < n1:
            r, c = np.unravel_index(flat, slack1.shape)
            witnesses.append(Witness(index=[int(r), int(c), 1], value=w.value))
        else:
            r, c = np.unravel_index(flat - n1, slack2.shape)
            witnesses.append(Witness(index=[int(r), int(c), 2], value=w.value))
    return report.model_copy(update={"witnesses": witnesses})


def check_complement(kernel0: MarkovKernel, kernel1: MarkovKernel, tol: float = STRICT_TOL) -> AssumptionReport:
    """f(.|theta1, x1=1) / f(.|theta1, x1=0) nondecreasing in theta2, row by row."""
    if not kernel0.shares_grids_with(kernel1):
        raise GridMismatchError("complement check needs kernels on the same grids")
    slack, _ = _cross_slack(kernel1.rows, kernel0.rows)
    return _report(AssumptionName.COMPLEMENT, slack < -tol, slack)


def check_log_concave(grid: TypeGrid, tol: float = STRICT_TOL) -> AssumptionReport:
    """m_i^2 >= m_{i-1} m_{i+1} at every interior cell."""
    if grid.kind != GridKind.DENSITY:
        raise UnsupportedKindError("log-concavity is checked on discretized densities")
    m = grid.weights
    if m.size < 3:
        return _report(AssumptionName.LOG_CONCAVE_AR1, np.zeros(0, dtype=bool), np.zeros(0))
    lhs = m[1:-1] ** 2
    rhs = m[:-2] * m[2:]
    scale = np.maximum(lhs, rhs)
    slack = np.where(scale > 0, (lhs - rhs) / np.where(scale > 0, scale, 1.0), 0.0)
    padded = np.concatenate([[np.inf], slack, [np.inf]])
    return _report(AssumptionName.LOG_CONCAVE_AR1, padded < -tol, padded)


# ---------------------------------------------------------------------------
# Supplementary checks
# ---------------------------------------------------------------------------


def hazard_rate(grid: TypeGrid) -> np.ndarray:
    """Midpoint hazard m_i / (tail above i + m_i/2)."""
    m = grid.weights
    above = np.concatenate([np.cumsum(m[::-1])[::-1][1:], [0.0]])
    denom = above + m / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom > 0, m / np.where(denom > 0, denom, 1.0), np.inf)


def check_monotone_hazard(grid: TypeGrid) -> AssumptionReport:
    """Nondecreasing hazard rate on positive-mass cells."""
    rate = hazard_rate(grid)
    positive = grid.weights > 0
    both = positive[1:] & positive[:-1]
    diff = rate[1:] - rate[:-1]
    slack = np.where(both, diff + STRICT_TOL * np.maximum(1.0, np.abs(rate[1:])), np.inf)
    return _report(AssumptionName.MONOTONE_HAZARD, slack < 0, slack)


def check_first_order_dominance(kernel: MarkovKernel) -> AssumptionReport:
    """Conditional cdfs pointwise ordered: F(.|theta1') <= F(.|theta1)."""
    cdfs = kernel.conditional_cdfs()
    slack = cdfs[:-1] - cdfs[1:]
    return _report(AssumptionName.FIRST_ORDER_DOMINANCE, slack < -1e-12, slack)


def check_primed(
    prior: TypeGrid,
    kernel0: MarkovKernel,
    kernel1: MarkovKernel,
    delta: float,
    strict: bool = False,
    tol: float = STRICT_TOL,
) -> List[AssumptionReport]:
    """Assumptions for the model where theta2's law depends on the first purchase."""
    reports = [
        check_mlrp(kernel0, strict, AssumptionName.MLRP_X, tol).model_copy(update={"detail": "x1=0"}),
        check_mlrp(kernel1, strict, AssumptionName.MLRP_X, tol).model_copy(update={"detail": "x1=1"}),
        check_lipschitz(kernel0, delta, AssumptionName.LIPSCHITZ_X, tol),
    ]
    if prior.kind == GridKind.DENSITY:
        reports.append(check_regularity(prior, kernel0, AssumptionName.REGULARITY_X, tol))
        reports.append(check_regularity(prior, kernel1, AssumptionName.REGULARITY_X, tol))
        reports.append(_check_impulse_order(prior, kernel0, kernel1, tol))
    reports.append(check_complement(kernel0, kernel1, tol))
    return reports


def _check_impulse_order(
    prior: TypeGrid, kernel0: MarkovKernel, kernel1: MarkovKernel, tol: float = STRICT_TOL
) -> AssumptionReport:
    """psi nondecreasing in x1, i.e. I(., ., 1) <= I(., ., 0) where both are defined."""
    from ratchet_pricing.mechanism import virtual_values

    t0 = virtual_values(prior, kernel0)
    t1 = virtual_values(prior, kernel1)
    both = t0.valid & t1.valid
    if not kernel0.shares_grids_with(kernel1):
        raise GridMismatchError("complement variant needs kernels on the same grids")
    slack = np.where(both, t1.psi - t0.psi + tol * np.maximum(1.0, np.abs(t0.psi)), np.inf)
    return _report(AssumptionName.REGULARITY_X, slack < 0, slack, "monotone in x1")


def check_ar1_chain(
    prior: TypeGrid, steps: Sequence[Ar1Spec], delta: float, tol: float = STRICT_TOL
) -> List[AssumptionReport]:
    """Log-concave prior and innovations, and 0 < alpha_t < 1/(2 delta) for every step."""
    reports = [check_log_concave(prior, tol).model_copy(update={"detail": "prior"})]
    for t, step in enumerate(steps, start=2):
        if step.noise.kind == GridKind.DENSITY:
            reports.append(check_log_concave(step.noise, tol).model_copy(update={"detail": f"innovation t={t}"}))
    bound = 1.0 / (2.0 * delta)
    alphas = np.array([s.alpha for s in steps])
    slack = np.minimum(alphas, bound - alphas)
    reports.append(_report(AssumptionName.AR1_SLOPE, slack <= 0, slack, f"alpha in (0, {bound:g})"))
    return reports


def check_pair(
    prior: TypeGrid,
    kernel: MarkovKernel,
    delta: float,
    strict: bool = False,
    tol: float = STRICT_TOL,
) -> List[AssumptionReport]:
    """Baseline two-period checks: MLRP, Lipschitz and (for density priors) regularity."""
    reports = [check_mlrp(kernel, strict, tol=tol), check_lipschitz(kernel, delta, tol=tol)]
    if prior.kind == GridKind.DENSITY:
        reports.append(check_regularity(prior, kernel, tol=tol))
    return reports


def failing(reports: Sequence[AssumptionReport]) -> List[AssumptionReport]:
    return [r for r in reports if not r.holds]


def summarize(reports: Sequence[AssumptionReport], label: Optional[str] = None) -> str:
    failed = [r.name.value + (f"({r.detail})" if r.detail else "") for r in failing(reports)]
    prefix = f"{label}: " if label else ""
    return prefix + ("all assumptions hold" if not failed else "failed " + ", ".join(failed))


def check_problem(
    problem: PricingProblem, strict: bool = False, tol: float = STRICT_TOL
) -> List[AssumptionReport]:
    """All checks relevant to a two-period instance, baseline or complements."""
    if problem.complements:
        return check_primed(problem.prior, problem.kernel_reject, problem.kernel_accept, problem.delta, strict, tol)
    return check_pair(problem.prior, problem.kernel_accept, problem.delta, strict, tol)
