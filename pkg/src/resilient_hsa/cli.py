#!/usr/bin/env python3
# !INFO: src/resilient_hsa/cli.py
"""Command-line interface for resilient_hsa.

Parses arguments, resolves the experiment configuration and dispatches to command handlers. Every command that
runs writes one JSON report; the exit code says how it went:

    0  success
    1  a verification mismatch (worked example, decode oracle, leakage or rate verdict)
    2  invalid configuration or parameters
    3  a randomized construction exhausted its retry budget
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
import argparse
from collections.abc import Callable, Sequence
from dataclasses import replace
from importlib.metadata import PackageNotFoundError, version as _v
import logging
import os
from pathlib import Path
import sys
from typing import TYPE_CHECKING, cast

# local
from resilient_hsa.__init__ import __version__
from resilient_hsa.config import CONFIG_KEYS, ExperimentConfig, load_config_file, resolve_config
from resilient_hsa.constants import (
    DIST_NAME,
    EXIT_CONSTRUCTION_FAILED,
    EXIT_INVALID_CONFIG,
    EXIT_MISMATCH,
    EXIT_OK,
)
from resilient_hsa.errors import ConstructionFailedError, HsaError, InvalidParamsError, VerificationError
from resilient_hsa.gc_code import strip_mask
from resilient_hsa.logging_setup import setup_logging
from resilient_hsa.metrics import check_in_region, measured_rates
from resilient_hsa.netsim import DropModel, EpisodeResult, sweep_patterns
from resilient_hsa.paths import default_report_path
from resilient_hsa.report import build_report, rates_document, write_report
from resilient_hsa.scheme import Scheme, audit_scheme, build_scheme, draw_models, draw_source
from resilient_hsa.vectors import example_scheme, load_vectors, verify_example

# --------------------------------------------------- BASEDPYRIGHT --------------------------------------------------- #
# Imported only for static checkers; not used at runtime.
if TYPE_CHECKING:
    from resilient_hsa.metrics import RateReport
    from resilient_hsa.scheme import SchemeAudit

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)


# ==================================================================================================================== #
#                                                        HELPERS                                                       #
# ==================================================================================================================== #
def _experiment_config(ns: argparse.Namespace) -> ExperimentConfig:
    """Merge the config file (if any), the flags and the environment."""
    config_path: Path | None = getattr(ns, "config", None)
    file_values = load_config_file(config_path) if config_path is not None else {}
    overrides = {key: getattr(ns, key, None) for key in CONFIG_KEYS}
    return resolve_config(file_values, overrides, os.environ)


def _report_path(cfg: ExperimentConfig, command: str) -> Path:
    return cfg.out if cfg.out is not None else default_report_path(command, cfg.seed)


def _scheme(cfg: ExperimentConfig) -> Scheme:
    """Build the scheme and apply the unmasking hook, if configured."""
    scheme = build_scheme(cfg.field_config(), cfg.d, cfg.s, cfg.seed)
    if cfg.unmask:
        log.warning("keys stripped from %d transmission(s): the scheme is deliberately insecure", len(cfg.unmask))
        scheme = replace(scheme, code=strip_mask(scheme.code, cfg.unmask))
    return scheme


def _rate_report(scheme: Scheme, cfg: ExperimentConfig) -> RateReport:
    _, sched = draw_source(scheme, cfg.L, cfg.seed)
    return measured_rates(sched, scheme.code, scheme.cfg, scheme.topology, cfg.L)


def _episode_verdicts(episodes: Sequence[EpisodeResult], scheme: Scheme) -> dict[str, bool]:
    """Decode exactly when at least ``K - s`` relays report, with the right sum, and without leakage."""
    threshold = scheme.topology.K - scheme.s
    return {
        "decode_threshold": all(e.decoded == (len(e.realization.v2) >= threshold) for e in episodes),
        "sums_match": all(e.oracle_match is not False for e in episodes),
        "no_leakage": all(e.audit.max_leakage == 0 for e in episodes),
    }


def _rate_verdicts(report: RateReport) -> dict[str, bool]:
    return {
        "rates_in_region": all(check_in_region(report).values()),
        "rates_optimal": all(report.achieves_optimum.values()),
    }


def _finish(
    cfg: ExperimentConfig,
    command: str,
    scheme: Scheme,
    episodes: Sequence[EpisodeResult],
    audit: SchemeAudit | None,
    rates: RateReport,
    verdicts: dict[str, bool],
) -> int:
    """Write the report and turn the verdicts into an exit code."""
    doc = build_report(cfg, scheme, episodes, audit, rates_document(rates, check_in_region(rates)), verdicts)
    path = write_report(doc, _report_path(cfg, command))
    failed = sorted(name for name, ok in verdicts.items() if not ok)
    if failed:
        log.error("%s: failed verdicts %s (report: %s)", command, failed, path)
        return EXIT_MISMATCH
    log.info("%s: all %d verdicts hold (report: %s)", command, len(verdicts), path)
    return EXIT_OK


# ==================================================================================================================== #
#                                                   COMMAND HANDLERS                                                   #
# ==================================================================================================================== #
def cmd_verify_example(ns: argparse.Namespace) -> int:
    """Replay the bundled worked example (or ``--vectors``) and check every displayed artifact.

    Returns:
        int: 0 when every artifact matches, 1 at the first mismatch.
    """
    cfg = _experiment_config(ns)
    vectors = load_vectors(cfg.vectors)
    check = verify_example(vectors)
    verdicts = dict.fromkeys(check.checks, True)
    scheme = example_scheme(vectors)
    episodes: list[EpisodeResult] = []
    return _finish(cfg, "verify-example", scheme, episodes, None, check.rates, verdicts)


def cmd_run(ns: argparse.Namespace) -> int:
    """Construct a scheme and run ``trials`` episodes under the drop model.

    Exhaustive drop models run every realization (bounded by ``budget``); ``none`` and ``fixed`` have one
    realization and run a single episode. ``trials = 0`` reports the construction alone.
    """
    cfg = _experiment_config(ns)
    scheme = _scheme(cfg)
    rates = _rate_report(scheme, cfg)
    episodes: list[EpisodeResult] = []
    if cfg.trials > 0:
        models = draw_models(scheme.cfg, cfg.L, cfg.seed)
        _, sched = draw_source(scheme, cfg.L, cfg.seed)
        budget = cfg.budget if cfg.drop.kind == "exhaustive" else cfg.trials
        episodes = sweep_patterns(scheme.cfg, scheme.topology, sched, scheme.code, models, cfg.drop, budget=budget)
    verdicts = {**_episode_verdicts(episodes, scheme), **_rate_verdicts(rates)}
    return _finish(cfg, "run", scheme, episodes, None, rates, verdicts)


def cmd_sweep(ns: argparse.Namespace) -> int:
    """Sweep every link realization for ``trials`` independent model draws.

    Without an explicit drop model the sweep enumerates every relay-to-server failure subset. Episodes are
    numbered consecutively across draws.
    """
    cfg = _experiment_config(ns)
    if cfg.drop.kind == "none":
        cfg = replace(cfg, drop=DropModel(kind="exhaustive", seed=cfg.seed))
    scheme = _scheme(cfg)
    rates = _rate_report(scheme, cfg)
    budget = cfg.budget if cfg.drop.kind == "exhaustive" else (cfg.budget or 1)
    episodes: list[EpisodeResult] = []
    for draw in range(cfg.trials):
        models = draw_models(scheme.cfg, cfg.L, cfg.seed + draw)
        _, sched = draw_source(scheme, cfg.L, cfg.seed + draw)
        batch = sweep_patterns(scheme.cfg, scheme.topology, sched, scheme.code, models, cfg.drop, budget=budget)
        episodes.extend(replace(e, trial=len(episodes) + i) for i, e in enumerate(batch))
        log.debug("draw %d: %d episodes", draw, len(batch))
    verdicts = {**_episode_verdicts(episodes, scheme), **_rate_verdicts(rates)}
    return _finish(cfg, "sweep", scheme, episodes, None, rates, verdicts)


def cmd_audit(ns: argparse.Namespace) -> int:
    """Rank-audit every relay and every (or a sampled) set of reporting relays, cross-checked by brute force.

    Brute-force checks too large to enumerate are marked ``skipped`` in the report; they never fail the run.
    """
    cfg = _experiment_config(ns)
    scheme = _scheme(cfg)
    rates = _rate_report(scheme, cfg)
    audit = audit_scheme(scheme, cfg.L, seed=cfg.seed, brute_force=True)
    verdicts = {
        "relays_secure": all(v == 0 for v in audit.relay_leakage),
        "server_secure": all(entry.leaked_dof == 0 for entry in audit.server),
        "oracle_agrees": all(check.status != "disagreement" for check in audit.oracle),
    }
    return _finish(cfg, "audit", scheme, [], audit, rates, verdicts)


# ==================================================================================================================== #
#                                                   PARSER CONSTRUCTION                                                #
# ==================================================================================================================== #
def _experiment_options() -> argparse.ArgumentParser:
    """Options shared by every subcommand; they mirror the config keys one-to-one."""
    parent = argparse.ArgumentParser(add_help=False, allow_abbrev=False)

    files = parent.add_argument_group("Files")
    _ = files.add_argument("--config", type=Path, help="key=value or JSON config file (flags override it)")
    _ = files.add_argument("--vectors", help="worked-example vector file (default: the packaged one)")
    _ = files.add_argument("--out", help="report path (default: reports/<command>-seed<seed>.json)")
    _ = files.add_argument("--log-level", help="root log level, e.g. DEBUG (overrides HSA_LOG_LEVEL)")

    params = parent.add_argument_group("Experiment")
    _ = params.add_argument("--K", type=int, help="clients and relays")
    _ = params.add_argument("--d", type=int, help="relays per client")
    _ = params.add_argument("--s", type=int, help="tolerated missing relay messages")
    _ = params.add_argument("--q", type=int, help="model alphabet size")
    _ = params.add_argument("--p", type=int, help="prime modulus (default: smallest prime above K(q-1))")
    _ = params.add_argument("--L", type=int, help="model length")
    _ = params.add_argument("--seed", type=int, help="master seed (HSA_SEED overrides it)")
    _ = params.add_argument(
        "--drop",
        help="none | bernoulli:P_C2R,P_R2S | fixed:r2s=1,2;c2r=CLIENT-RELAY,... | exhaustive[:R2S_MAX[:C2R_DEPTH]]",
    )
    _ = params.add_argument("--trials", type=int, help="episodes (run) or model draws (sweep)")
    _ = params.add_argument("--budget", type=int, help="largest number of episodes one sweep may run")
    _ = params.add_argument("--unmask", help="CLIENT-RELAY,... transmissions sent without their key (test hook)")
    return parent


def _build_parser() -> argparse.ArgumentParser:
    """Build the main CLI parser (UV-style) with global options and one subparser per command."""
    parser: argparse.ArgumentParser = argparse.ArgumentParser(
        prog="hsa",
        description="Resilient hierarchical secure aggregation: build, simulate and audit schemes over Z_p.",
        usage="%(prog)s [OPTIONS] <COMMAND> [ARGS]",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        add_help=False,  # suppress auto-help, we add it in the group
        allow_abbrev=False,  # avoid accidental abbrevs (e.g. --s for --seed)
        exit_on_error=True,
        epilog="Use '%(prog)s <command> --help' for the experiment options.",
    )

    # ------- resolve version string ------- #
    # Prefer installed distribution metadata, fall back to __version__ for local dev.
    try:
        shown_version = f"{DIST_NAME} v{_v(DIST_NAME)}"
    except PackageNotFoundError:
        shown_version = f"{DIST_NAME} v{__version__}"

    # ------- global options (UV-style group) ------- #
    global_opts = parser.add_argument_group("Global options")

    _ = global_opts.add_argument(
        "-h",
        "--help",
        action="help",
        help="Display the concise help for this command",
    )
    _ = global_opts.add_argument(
        "-v",
        "--version",
        action="version",
        version=shown_version,
        help=f"Display the {DIST_NAME} version",
    )

    # ------- subcommands ------- #
    subparsers = parser.add_subparsers(dest="cmd", metavar="<command>")
    subparsers.required = True
    shared = [_experiment_options()]

    commands: list[tuple[str, str, Callable[[argparse.Namespace], int]]] = [
        ("verify-example", "Check the bundled worked example bit-exactly", cmd_verify_example),
        ("run", "Construct a scheme and run episodes under a drop model", cmd_run),
        ("sweep", "Run every link realization over several model draws", cmd_sweep),
        ("audit", "Audit relay and server leakage of a constructed scheme", cmd_audit),
    ]
    for name, help_text, func in commands:
        sub = subparsers.add_parser(name, help=help_text, parents=shared, allow_abbrev=False)
        sub.set_defaults(func=func)

    return parser


# ==================================================================================================================== #
#                                                        DISPATCH                                                      #
# ==================================================================================================================== #
def _dispatch(ns: argparse.Namespace) -> int:
    """Route to the subcommand and map failures onto exit codes."""
    if not hasattr(ns, "func"):
        log.error("No subcommand specified")
        return EXIT_INVALID_CONFIG

    log.debug("Dispatching to subcommand: %s", getattr(ns, "cmd", "<unknown>"))
    func = cast("Callable[[argparse.Namespace], int]", ns.func)
    try:
        return func(ns)
    except VerificationError as exc:
        log.exception("Verification failed at %s", exc.artifact)
        return EXIT_MISMATCH
    except InvalidParamsError:
        log.exception("Invalid configuration")
        return EXIT_INVALID_CONFIG
    except ConstructionFailedError:
        log.exception("Construction failed")
        return EXIT_CONSTRUCTION_FAILED
    except (HsaError, OSError):
        # BudgetExceededError and unreadable files are configuration problems too
        log.exception("Command failed")
        return EXIT_INVALID_CONFIG


# ==================================================================================================================== #
#                                                         MAIN                                                         #
# ==================================================================================================================== #
def main(argv: Sequence[str] | None = None) -> int:
    """Parse CLI arguments and return an exit code (never calls sys.exit here).

    - In tests, we call `main([...])` directly with a custom argv list.
    - In production, the console script entry point calls `main()` with no args.
      In that case, we fall back to `sys.argv[1:]` to read the actual CLI input.
    - We also convert argparse's SystemExit into an integer code to simplify testing.
    """
    parser: argparse.ArgumentParser = _build_parser()

    # 1. Support both direct calls (tests) and console_scripts (argv=None)
    if argv is None:
        argv = sys.argv[1:]

    # 2. No args → show help (common UX)
    if not argv:
        parser.print_help()
        return EXIT_OK

    # 3. Parse arguments (catch SystemExit to make testing easier)
    try:
        ns: argparse.Namespace = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code is None else int(e.code)

    # 4. Logging needs --log-level, so it is configured once the arguments are known
    setup_logging(getattr(ns, "log_level", None))

    # 5. Dispatch to subcommands or actions
    return _dispatch(ns)


if __name__ == "__main__":
    sys.exit(main())
