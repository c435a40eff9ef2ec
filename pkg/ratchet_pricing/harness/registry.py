"""Bundled scenario files and the reproduction targets built on them."""

from pathlib import Path
from typing import Dict, List

from ratchet_pricing.exceptions import ScenarioParseError
from ratchet_pricing.harness.scenarios import Scenario, SweepSpec, load_scenario, load_sweep

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

# reproduction id -> bundled scenario
REPRODUCTIONS: Dict[str, str] = {
    "ex1": "example1",
    "ex2-d1": "ex2_d1",
    "ex3-negative": "ex3_negative",
    "ex4-substitutes": "ex4_substitutes",
    "fig1-sweep": "fig1_sweep",
}

SWEEPS: Dict[str, str] = {
    "fig1_sweep": "fig1_alpha",
}


def list_scenarios() -> List[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.json") if not p.stem.endswith("_alpha"))


def scenario_path(scenario_id: str) -> Path:
    path = SCENARIO_DIR / f"{scenario_id}.json"
    if not path.exists():
        raise ScenarioParseError(f"no bundled scenario '{scenario_id}' (have: {', '.join(list_scenarios())})")
    return path


def bundled(scenario_id: str) -> Scenario:
    return load_scenario(scenario_path(scenario_id))


def bundled_sweep(scenario_id: str) -> SweepSpec:
    if scenario_id not in SWEEPS:
        raise ScenarioParseError(f"scenario '{scenario_id}' has no bundled sweep")
    return load_sweep(scenario_path(SWEEPS[scenario_id]))


def resolve(reference: str) -> Scenario:
    """A scenario from a file path, or a bundled id when no such file exists."""
    path = Path(reference)
    if path.suffix == ".json" and path.exists():
        return load_scenario(path)
    return bundled(reference)
