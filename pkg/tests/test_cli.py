"""
Tests for the ratchet-pricing command line: exit codes and output files.
"""

import json
from pathlib import Path

import pytest

from ratchet_pricing.exceptions import (
    NoFixedPointError,
    ReproductionAssertionError,
    ScenarioValidationError,
)
from ratchet_pricing.harness.cli import SCENARIO_COMMANDS, build_parser, main
from ratchet_pricing.harness.commands import (
    EXIT_ASSERTION,
    EXIT_ERROR,
    EXIT_OK,
    EXIT_VALIDATION,
    ScenarioInput,
    check_command,
    exit_code_for,
)

# ============================================================================
# TEST SUITE 1: Exit Codes
# ============================================================================


class TestExitCodes:
    """Test suite for mapping failures to exit codes."""

    def test_mapping(self):
        assert exit_code_for(ReproductionAssertionError("mismatch")) == EXIT_ASSERTION
        assert exit_code_for(ScenarioValidationError("bad", "delta")) == EXIT_VALIDATION
        assert exit_code_for(NoFixedPointError("none")) == EXIT_ERROR
        assert exit_code_for(RuntimeError("boom")) == EXIT_ERROR

    def test_command_never_raises(self):
        output = check_command(ScenarioInput(scenario="no_such_scenario"))

        assert not output.success
        assert output.exit_code == EXIT_VALIDATION
        assert "no_such_scenario" in output.error_message


# ============================================================================
# TEST SUITE 2: Commands
# ============================================================================


class TestCommandLine:
    """Test suite for main()."""

    def test_monopoly(self, capsys):
        code = main(["monopoly", "example1_small", "--threads", "1"])
        payload = json.loads(capsys.readouterr().out)

        assert code == EXIT_OK
        assert payload["success"] is True
        assert abs(payload["benchmark"]["revenue"] - 2.0) < 1e-9
        assert len(payload["periods"]) == 2

    def test_unknown_scenario(self):
        assert main(["check", "no_such_scenario"]) == EXIT_VALIDATION

    def test_csv_is_only_for_sweeps(self, tmp_path, capsys):
        with pytest.raises(SystemExit):
            main(["monopoly", "example1_small", "--csv", str(tmp_path / "x.csv")])
        assert "--csv" in capsys.readouterr().err
        assert build_parser().parse_args(["sweep", "fig1_sweep", "--csv", "x.csv"]).csv == "x.csv"

    def test_out_files_are_reproducible(self, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"

        assert main(["equilibrium", "example1_small", "--threads", "2", "--out", str(first)]) == EXIT_OK
        assert main(["equilibrium", "example1_small", "--threads", "2", "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        assert "processing_time" not in json.loads(first.read_text())

    def test_reproduce(self, capsys):
        assert main(["reproduce", "ex4-substitutes"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["report"]["passed"] is True

    def test_reproduce_unknown(self):
        assert main(["reproduce", "nope"]) == EXIT_VALIDATION

    def test_multi_without_commit(self, capsys):
        """Three periods without the commit option are not solved."""
        assert main(["multi", "multi_period", "--no-commit", "--grid", "21"]) == EXIT_ERROR
        payload = json.loads(capsys.readouterr().out)
        assert payload["success"] is False

    def test_readme_documents_every_subcommand(self):
        """The README is plain UTF-8 and shows each subcommand."""
        readme = (Path(__file__).resolve().parents[1] / "README.md").read_bytes()
        text = readme.decode("utf-8")

        assert b"\x00" not in readme
        for name in [*SCENARIO_COMMANDS, "reproduce"]:
            assert f"ratchet-pricing {name} " in text
