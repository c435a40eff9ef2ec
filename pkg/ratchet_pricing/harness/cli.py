"""
Command-line entry point.

    ratchet-pricing equilibrium example1 --grid 201 --out result.json
    ratchet-pricing reproduce ex3-negative
    ratchet-pricing sweep fig1_sweep --csv fig1.csv

Results go to stdout (or --out) as JSON; logs go to stderr.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

from ratchet_pricing.config import LOG_LEVEL, THREADS
from ratchet_pricing.domain.games import BeliefRule, TieRule
from ratchet_pricing.harness import commands
from ratchet_pricing.harness.oracle import OracleQuery

SCENARIO_COMMANDS = {
    "check": "Report which distributional assumptions hold",
    "monopoly": "Per-period monopoly prices and the posting benchmark",
    "relax": "Solve the mechanism-design relaxation",
    "commit": "Unconstrained commitment optimum",
    "equilibrium": "Seller-optimal PBE-star of the two-period game",
    "enumerate": "Enumerate pure equilibria of a finite game",
    "multi": "Multi-period equilibrium over the history tree",
    "sweep": "Parameter sweep to CSV",
    "oracle": "Brute-force cross-check",
}


def configure_logging(verbose: bool = False) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else LOG_LEVEL)


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="Write the JSON result to this path")
    common.add_argument("--grid", type=int, default=None, help="Override the type and price grid size")
    common.add_argument("--threads", type=int, default=THREADS, help=f"Worker threads (default: {THREADS})")
    common.add_argument("--seed", type=int, default=None, help="Override the scenario seed")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="ratchet-pricing",
        description="Dynamic pricing with limited commitment: solvers and reproduction harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in SCENARIO_COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("scenario", help="Scenario file path or bundled scenario id")
        if name == "enumerate":
            p.add_argument("--tie-rule", choices=[r.value for r in TieRule], default=None)
            p.add_argument("--belief-rule", choices=[r.value for r in BeliefRule], default=None)
        elif name == "multi":
            p.add_argument("--no-commit", action="store_true", help="Solve without the commitment option")
        elif name == "sweep":
            p.add_argument("sweep", nargs="?", default=None, help="Sweep spec path (bundled spec when omitted)")
            p.add_argument("--csv", default=None, help="Write the sweep table to this CSV path")
        elif name == "oracle":
            p.add_argument("query", choices=[q.value for q in OracleQuery])
            p.add_argument("--p1", type=float, default=None)
            p.add_argument("--p-A", dest="p_A", type=float, default=None)
            p.add_argument("--p-R", dest="p_R", type=float, default=None)

    p = sub.add_parser("reproduce", parents=[common], help="Reproduce a published example")
    p.add_argument("example_id", help="ex1, ex2-d1, ex3-negative, ex4-substitutes or fig1-sweep")
    return parser


def _dispatch(args: argparse.Namespace) -> commands.CommandOutput:
    if args.command == "reproduce":
        return commands.reproduce_command(
            commands.ReproduceInput(example_id=args.example_id, grid=args.grid, threads=args.threads)
        )
    base = {"scenario": args.scenario, "grid": args.grid, "threads": args.threads, "seed": args.seed}
    if args.command == "enumerate":
        return commands.enumerate_command(
            commands.EnumerateInput(**base, tie_rule=args.tie_rule, belief_rule=args.belief_rule)
        )
    if args.command == "multi":
        return commands.multi_command(commands.MultiInput(**base, commit_option=not args.no_commit))
    if args.command == "sweep":
        return commands.sweep_command(commands.SweepInput(**base, sweep=args.sweep, csv=args.csv))
    if args.command == "oracle":
        return commands.oracle_command(
            commands.OracleInput(**base, query=args.query, p1=args.p1, p_A=args.p_A, p_R=args.p_R)
        )
    handler = {
        "check": commands.check_command,
        "monopoly": commands.monopoly_command,
        "relax": commands.relax_command,
        "commit": commands.commit_command,
        "equilibrium": commands.equilibrium_command,
    }[args.command]
    return handler(commands.ScenarioInput(**base))


def _emit(output: commands.CommandOutput, out: Optional[str]) -> None:
    if out is None:
        print(output.model_dump_json(indent=2))
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    # timing varies run to run; files stay byte-identical
    path.write_text(output.model_dump_json(indent=2, exclude={"processing_time"}) + "\n", encoding="utf-8")
    logger.info(f"Wrote {output.command} result to {path}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        output = _dispatch(args)
    except Exception as e:
        # input models reject bad flag values before any command runs
        logger.error(f"invalid arguments: {e}")
        return commands.EXIT_VALIDATION
    _emit(output, args.out)
    return output.exit_code


if __name__ == "__main__":
    sys.exit(main())
