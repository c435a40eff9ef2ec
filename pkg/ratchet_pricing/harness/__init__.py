"""Scenario files, reproduction targets, sweeps, oracles and the CLI"""

from .oracle import OracleQuery, OracleResult, oracle_bruteforce
from .registry import bundled, list_scenarios, resolve
from .reproduce import ReproductionReport, reproduce
from .scenarios import (
    Scenario,
    SweepSpec,
    build_game,
    build_multi_period,
    build_problem,
    check_scenario,
    load_scenario,
    load_sweep,
    random_instances,
)
from .sweep import run_sweep

__all__ = [
    # Scenarios
    "Scenario",
    "SweepSpec",
    "load_scenario",
    "load_sweep",
    "build_problem",
    "build_game",
    "build_multi_period",
    "check_scenario",
    "random_instances",
    "bundled",
    "list_scenarios",
    "resolve",
    # Pipelines
    "reproduce",
    "ReproductionReport",
    "run_sweep",
    "oracle_bruteforce",
    "OracleQuery",
    "OracleResult",
]
