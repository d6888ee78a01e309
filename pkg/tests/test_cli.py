# tests/test_cli.py
"""CLI tests for 'hsa': help, version, every subcommand, reports and exit codes."""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
# stdlib
from __future__ import annotations

import json
from typing import TYPE_CHECKING, Any

# 3rd party
import pytest

# local
from resilient_hsa import __version__
from resilient_hsa.constants import DIST_NAME, ENV_SEED

# ------------------------------------------------------ PYRIGHT ----------------------------------------------------- #
# Type-only imports (kept out of runtime for speed/cleanliness).
if TYPE_CHECKING:
    from collections.abc import Callable
    from pathlib import Path

    from _pytest.mark import MarkDecorator
    from _pytest.monkeypatch import MonkeyPatch
    from resilient_hsa.vectors import ExampleVectors
    from tests.conftest import CliResult

    type Runner = Callable[[list[str]], CliResult]

# ------------------------------------------------------ PYTEST ------------------------------------------------------ #
pytestmark: MarkDecorator = pytest.mark.cli

SMALL = ["--K", "3", "--d", "2", "--s", "1", "--q", "2", "--p", "5", "--L", "1"]


def _report(path: Path) -> dict[str, Any]:
    return json.loads(path.read_text(encoding="utf-8"))


# ==================================================================================================================== #
#                                                    HELP & VERSION                                                    #
# ==================================================================================================================== #
def test_cli_no_args(run_cli: Runner) -> None:
    """Running the cli with no args prints help to stdout and exits with code 0."""
    code, out, err = run_cli([])

    assert code == 0
    assert "usage: hsa" in out
    assert "Global options" in out
    assert err == ""


def test_cli_help_option(run_cli: Runner) -> None:
    """Running `hsa --help` lists the subcommands and exits with code 0."""
    code, out, err = run_cli(["--help"])

    assert code == 0
    assert "usage: hsa" in out
    for command in ("verify-example", "run", "sweep", "audit"):
        assert command in out
    assert err == ""


def test_cli_subcommand_help_lists_experiment_options(run_cli: Runner) -> None:
    """`hsa run --help` shows the shared experiment options."""
    code, out, _ = run_cli(["run", "--help"])

    assert code == 0
    assert "--drop" in out
    assert "--budget" in out


def test_cli_version_option(run_cli: Runner) -> None:
    """Running `hsa --version` prints the version and exits with code 0."""
    code, out, err = run_cli(["--version"])

    expected: str = f"{DIST_NAME} v{__version__}\n"  # argparse adds a trailing newline
    assert code == 0
    assert out == expected
    assert err == ""


def test_cli_unknown_command(run_cli: Runner) -> None:
    """argparse rejects unknown subcommands with exit code 2."""
    code, _, err = run_cli(["frobnicate"])

    assert code == 2
    assert "invalid choice" in err


# ==================================================================================================================== #
#                                                    VERIFY-EXAMPLE                                                    #
# ==================================================================================================================== #
@pytest.mark.golden
def test_cli_verify_example(run_cli: Runner, tmp_path: Path) -> None:
    """The bundled worked example verifies and every check is a passing verdict."""
    out_path = tmp_path / "verify.json"
    code, _, _ = run_cli(["verify-example", "--out", str(out_path)])

    assert code == 0
    doc = _report(out_path)
    assert doc["verdicts"]["C_1"] is True
    assert doc["verdicts"]["5 decodes"] is True
    assert doc["episodes"] == []
    assert doc["scheme"]["p"] == 13


@pytest.mark.golden
def test_cli_verify_example_mismatch(run_cli: Runner, tmp_path: Path, example_vectors: ExampleVectors) -> None:
    """A vector file with one changed entry of C_1 fails with exit code 1, naming C_1."""
    raw = json.loads(json.dumps(example_vectors.raw))
    raw["combos"]["1"][0][1] = 8
    vectors = tmp_path / "vectors.json"
    vectors.write_text(json.dumps(raw), encoding="utf-8")

    code, _, err = run_cli(["verify-example", "--vectors", str(vectors), "--out", str(tmp_path / "r.json")])

    assert code == 1
    assert "Verification failed at C_1" in err


# ==================================================================================================================== #
#                                                       RUN                                                            #
# ==================================================================================================================== #
def test_cli_run_with_failed_uplink(run_cli: Runner, tmp_path: Path) -> None:
    """One failed uplink is within s = 1: the sum decodes and every verdict holds."""
    out_path = tmp_path / "run.json"
    code, _, _ = run_cli(["run", "--drop", "fixed:r2s=1", "--out", str(out_path)])

    assert code == 0
    doc = _report(out_path)
    (episode,) = doc["episodes"]
    assert episode["V2"] == [2, 3, 4, 5]
    assert episode["outcome"]["decoded"] is True
    assert episode["outcome"]["oracle_match"] is True
    assert doc["config"]["drop"] == "fixed:r2s=1"
    assert all(doc["verdicts"].values())


def test_cli_run_fixed_drop_ignores_extra_trials(run_cli: Runner, tmp_path: Path) -> None:
    """A fixed drop model has one realization: --trials 3 still reports a single episode."""
    out_path = tmp_path / "run.json"
    code, _, err = run_cli(["run", *SMALL, "--drop", "fixed:r2s=2", "--trials", "3", "--out", str(out_path)])

    assert code == 0
    doc = _report(out_path)
    (episode,) = doc["episodes"]
    assert episode["V2"] == [1, 3]
    assert "running 1 episode instead of 3" in err


def test_cli_run_zero_trials(run_cli: Runner, tmp_path: Path) -> None:
    """--trials 0 reports the construction alone."""
    out_path = tmp_path / "run.json"
    code, _, _ = run_cli(["run", "--trials", "0", "--out", str(out_path)])

    assert code == 0
    doc = _report(out_path)
    assert doc["episodes"] == []
    assert doc["summary"]["success_fraction"] is None
    assert doc["rates"]["achieves_optimum"]["R1"] is True


def test_cli_run_is_reproducible(run_cli: Runner, tmp_path: Path) -> None:
    """Two runs with the same configuration write byte-identical reports."""
    args = ["run", "--drop", "bernoulli:0.1,0.2", "--trials", "3", "--seed", "4"]
    first, second = tmp_path / "a.json", tmp_path / "b.json"

    assert run_cli([*args, "--out", str(first)]).code == 0
    assert run_cli([*args, "--out", str(second)]).code == 0
    assert first.read_bytes() == second.read_bytes()


def test_cli_seed_from_environment(run_cli: Runner, tmp_path: Path, monkeypatch: MonkeyPatch) -> None:
    """HSA_SEED overrides --seed and names the default report file."""
    (tmp_path / "pyproject.toml").write_text("", encoding="utf-8")
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv(ENV_SEED, "3")

    code, _, _ = run_cli(["run", "--trials", "0", "--seed", "1", *SMALL])

    assert code == 0
    doc = _report(tmp_path / "reports" / "run-seed3.json")
    assert doc["config"]["seed"] == 3
    assert doc["scheme"]["construction_seed"] == 3


def test_cli_config_file(run_cli: Runner, tmp_path: Path) -> None:
    """Values come from --config unless a flag overrides them."""
    config = tmp_path / "exp.conf"
    config.write_text("K = 3\nd = 2\ns = 1\nq = 2\nL = 1\nseed = 8\n", encoding="utf-8")
    out_path = tmp_path / "run.json"

    code, _, _ = run_cli(["run", "--config", str(config), "--seed", "2", "--out", str(out_path)])

    assert code == 0
    doc = _report(out_path)
    assert (doc["config"]["K"], doc["config"]["seed"], doc["config"]["p"]) == (3, 2, 5)


@pytest.mark.parametrize(
    "args",
    [["--d", "5"], ["--s", "3"], ["--p", "12"], ["--drop", "sometimes"], ["--L", "0"], ["--unmask", "4-1"]],
)
def test_cli_invalid_configuration(run_cli: Runner, tmp_path: Path, args: list[str]) -> None:
    """Violated preconditions exit with code 2 before anything is written."""
    out_path = tmp_path / "run.json"
    code, _, err = run_cli(["run", *args, "--out", str(out_path)])

    assert code == 2
    assert "Invalid configuration" in err
    assert not out_path.exists()


# ==================================================================================================================== #
#                                                       SWEEP                                                          #
# ==================================================================================================================== #
def test_cli_sweep_every_uplink_subset(run_cli: Runner, tmp_path: Path) -> None:
    """Two model draws over all 8 uplink subsets of K = 3, numbered consecutively."""
    out_path = tmp_path / "sweep.json"
    code, _, _ = run_cli(["sweep", *SMALL, "--trials", "2", "--out", str(out_path)])

    assert code == 0
    doc = _report(out_path)
    assert [e["trial"] for e in doc["episodes"]] == list(range(16))
    assert doc["summary"]["decoded"] == 8
    assert doc["summary"]["max_leakage"] == 0
    assert doc["config"]["drop"] == "exhaustive"


def test_cli_sweep_over_budget(run_cli: Runner, tmp_path: Path) -> None:
    """Eight realizations do not fit a budget of 3."""
    code, _, err = run_cli(["sweep", *SMALL, "--budget", "3", "--out", str(tmp_path / "s.json")])

    assert code == 2
    assert "exceeding the budget 3" in err


# ==================================================================================================================== #
#                                                       AUDIT                                                          #
# ==================================================================================================================== #
def test_cli_audit_small_scheme(run_cli: Runner, tmp_path: Path) -> None:
    """K = 3 is audited exhaustively and the brute-force oracle agrees everywhere."""
    out_path = tmp_path / "audit.json"
    code, _, _ = run_cli(["audit", *SMALL, "--out", str(out_path)])

    assert code == 0
    doc = _report(out_path)
    assert doc["audit"]["mode"] == "exhaustive"
    assert {check["status"] for check in doc["audit"]["oracle"]} == {"agreement"}
    assert doc["verdicts"] == {"oracle_agrees": True, "relays_secure": True, "server_secure": True}


def test_cli_audit_detects_unmasking(run_cli: Runner, tmp_path: Path) -> None:
    """Sending both of relay 1's messages without keys is caught: exit code 1 and positive leakage."""
    out_path = tmp_path / "audit.json"
    code, _, err = run_cli(["audit", *SMALL, "--unmask", "1-1,2-1", "--out", str(out_path)])

    assert code == 1
    assert "deliberately insecure" in err
    doc = _report(out_path)
    assert doc["audit"]["relay_leakage"][0] > 0
    assert doc["verdicts"]["relays_secure"] is False
    assert doc["scheme"]["code"]["unmasked"] == [[1, 1], [1, 2]]
