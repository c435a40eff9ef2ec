"""
Parameter sweeps: re-solve a scenario over a grid of values for one field
and collect the resulting prices and revenues in a table that can be
written to CSV.
"""

import concurrent.futures
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

from ratchet_pricing.config import THREADS
from ratchet_pricing.exceptions import RatchetPricingError
from ratchet_pricing.harness.scenarios import Scenario, SweepSpec, build_problem, set_parameter

SWEEP_COLUMNS = [
    "param",
    "p_star",
    "p_A_commit",
    "p_R_commit",
    "p_A_eq",
    "p_R_eq",
    "benchmark",
    "commit_revenue",
    "eq_revenue",
    "error",
]


def sweep_row(scenario: Scenario, spec: SweepSpec, value: float) -> Dict[str, object]:
    """One sweep row; solver errors land in the error column."""
    from ratchet_pricing.equilibrium.two_period import solve_pbe_star
    from ratchet_pricing.mechanism import commitment_optimum
    from ratchet_pricing.pricing import static_posting_benchmark

    row: Dict[str, object] = {column: np.nan for column in SWEEP_COLUMNS}
    row["param"] = float(value)
    row["error"] = ""
    try:
        problem = build_problem(set_parameter(scenario, spec.parameter, value))
        if "benchmark" in spec.outputs:
            benchmark = static_posting_benchmark(problem)
            row["p_star"] = benchmark.prices[-1]
            row["benchmark"] = benchmark.revenue
        if "commitment" in spec.outputs:
            commit = commitment_optimum(problem)
            row["p_A_commit"] = commit.p_A
            row["p_R_commit"] = commit.p_R
            row["commit_revenue"] = commit.revenue
        if "equilibrium" in spec.outputs:
            outcome = solve_pbe_star(problem, threads=1)
            row["p_A_eq"] = outcome.p_A
            row["p_R_eq"] = outcome.p_R
            row["eq_revenue"] = outcome.revenue
    except RatchetPricingError as e:
        logger.warning(f"sweep row {spec.parameter}={value} failed: {e}")
        row["error"] = f"{type(e).__name__}: {e}"
    return row


def run_sweep(
    scenario: Scenario,
    spec: SweepSpec,
    threads: int = THREADS,
    csv_path: Optional[Union[str, Path]] = None,
) -> pd.DataFrame:
    """
    Solve the scenario once per parameter value.

    Rows run in parallel and are assembled in ascending parameter order, so the
    table does not depend on the thread count.
    """
    values = sorted(spec.values)
    logger.info(f"Sweeping {spec.parameter} over {len(values)} values with {threads} threads")
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        rows: List[Dict[str, object]] = list(executor.map(lambda v: sweep_row(scenario, spec, v), values))

    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    failed = int((frame["error"] != "").sum())
    if failed:
        logger.warning(f"{failed} of {len(values)} sweep rows failed")
    if csv_path is not None:
        write_csv(frame, csv_path)
    return frame


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.12g")
    logger.info(f"Wrote {len(frame)} sweep rows to {path}")
    return path
