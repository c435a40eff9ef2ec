"""Independent re-check of a two-period PBE-star candidate."""

from typing import Dict, List, Tuple

import numpy as np
from loguru import logger

from ratchet_pricing.config import MASS_TOL
from ratchet_pricing.dist_core import survival_table
from ratchet_pricing.domain.distributions import MarkovKernel, TypeGrid
from ratchet_pricing.domain.problem import PricingProblem
from ratchet_pricing.domain.results import EquilibriumOutcome, VerificationReport
from ratchet_pricing.equilibrium.two_period import support_bounds
from ratchet_pricing.pricing import acceptance_gain, monopoly_price


def _history_belief(
    problem: PricingProblem, kernel: MarkovKernel, members: np.ndarray, off_path_index: int, mass_tol: float
) -> Tuple[TypeGrid, float, str]:
    weights = np.where(members, problem.prior.weights, 0.0)
    mass = float(weights.sum())
    if mass > mass_tol:
        return kernel.to_grid.with_weights((weights / mass) @ kernel.rows), mass, "posterior"
    return kernel.row(off_path_index), 0.0, "point"


def _shortfall(belief: TypeGrid, price: float) -> float:
    """Monopoly revenue minus the revenue of the posted price."""
    best = monopoly_price(belief).revenue
    return max(0.0, best - price * belief.survival(price))


def verify_equilibrium(
    candidate: EquilibriumOutcome,
    problem: PricingProblem,
    tol: float = 1e-9,
    mass_tol: float = MASS_TOL,
) -> VerificationReport:
    """
    Re-derive every PBE-star condition from the problem alone.

    Checks buyer best responses type by type, second-period monopoly pricing
    against recomputed beliefs (point beliefs off path), the reported belief
    summaries and the reported revenue. Histories carrying no more than
    mass_tol of the prior are off path.
    """
    theta = problem.theta1
    m = problem.prior.weights
    delta = problem.delta
    p1, p_A, p_R = candidate.p1, candidate.p_A, candidate.p_R

    if candidate.acceptance:
        accept = np.asarray(candidate.acceptance, dtype=bool)
    else:
        accept = theta >= candidate.k - 1e-12 * max(1.0, abs(candidate.k))

    checks: Dict[str, float] = {}
    failures: List[str] = []

    gain = acceptance_gain(p1, p_A, p_R, problem)
    regret = np.where(accept, -gain, gain)
    checks["buyer"] = float(max(0.0, regret.max()))
    if checks["buyer"] > tol:
        worst = int(np.argmax(regret))
        failures.append(f"buyer: type {theta[worst]:.6g} loses {regret[worst]:.3g} by its choice")

    lo_i, hi_i = support_bounds(problem.prior)
    belief_a, mass_a, kind_a = _history_belief(problem, problem.kernel_accept, accept, hi_i, mass_tol)
    belief_r, mass_r, kind_r = _history_belief(problem, problem.kernel_reject, ~accept, lo_i, mass_tol)

    checks["seller_accept"] = _shortfall(belief_a, p_A)
    checks["seller_reject"] = _shortfall(belief_r, p_R)
    for name, price in (("seller_accept", p_A), ("seller_reject", p_R)):
        if checks[name] > tol:
            failures.append(f"{name}: price {price:.6g} is {checks[name]:.3g} short of the monopoly revenue")

    belief_gap = 0.0
    recomputed = {"A": (belief_a, mass_a, kind_a), "R": (belief_r, mass_r, kind_r)}
    for summary in candidate.beliefs:
        if summary.history not in recomputed:
            continue
        grid, mass, kind = recomputed[summary.history]
        belief_gap = max(belief_gap, abs(summary.mass - mass), abs(summary.mean - grid.mean()))
        if kind == "point" and summary.kind != "point":
            failures.append(f"beliefs: off-path history {summary.history} is not read as a boundary type")
    checks["beliefs"] = belief_gap
    if belief_gap > tol:
        failures.append(f"beliefs: summaries differ from the recomputed posteriors by {belief_gap:.3g}")

    s_a = survival_table(problem.kernel_accept, np.array([p_A]))[:, 0]
    s_r = survival_table(problem.kernel_reject, np.array([p_R]))[:, 0]
    revenue = float(np.dot(m, np.where(accept, p1 + delta * p_A * s_a, delta * p_R * s_r)))
    checks["revenue"] = abs(revenue - candidate.revenue)
    if checks["revenue"] > tol:
        failures.append(f"revenue: reported {candidate.revenue:.9g}, recomputed {revenue:.9g}")

    report = VerificationReport(
        passed=not failures,
        max_violation=max(checks.values()),
        checks=checks,
        failures=failures,
    )
    if failures:
        logger.warning(f"equilibrium check failed: {'; '.join(failures)}")
    return report
