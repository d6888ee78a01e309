# src/resilient_hsa/report.py
"""Deterministic JSON reports.

Top-level keys: ``config``, ``scheme``, ``episodes``, ``summary``, ``audit``, ``rates``, ``verdicts``. Rationals
are written as ``{"num": .., "den": ..}``; the scheme is identified by SHA-256 digests of a canonical JSON rendering
of ``G_S`` and of the code. Reports contain no timestamps or host data, so identical configurations produce
byte-identical files.
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from collections import Counter
from collections.abc import Mapping, Sequence
from fractions import Fraction
import hashlib
import json
import logging
from typing import TYPE_CHECKING, Any

# Local
from resilient_hsa.netsim import EpisodeResult, InsufficientRelays
from resilient_hsa.protocol import AggregateResult

# --------------------------------------------------- BASEDPYRIGHT --------------------------------------------------- #
# Imported only for static checkers; not used at runtime.
if TYPE_CHECKING:
    from pathlib import Path

    from resilient_hsa.config import ExperimentConfig
    from resilient_hsa.gc_code import GcCode
    from resilient_hsa.metrics import Rate, RateBounds, RateReport
    from resilient_hsa.scheme import Scheme, SchemeAudit
    from resilient_hsa.security_audit import MutualInformation

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)


# ==================================================================================================================== #
#                                                     ENCODERS                                                         #
# ==================================================================================================================== #


def rational(value: Fraction) -> dict[str, int]:
    """``{"num": .., "den": ..}`` in lowest terms."""
    return {"num": value.numerator, "den": value.denominator}


def canonical_digest(obj: object) -> str:
    """SHA-256 of the compact, key-sorted JSON rendering of ``obj``."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def code_document(code: GcCode) -> dict[str, Any]:
    """Encoders and combination matrices keyed the same way as the vector file."""
    encoders: dict[str, dict[str, list[int]]] = {}
    for (m, k), w in sorted(code.encoders.items()):
        encoders.setdefault(str(m), {})[str(k)] = w.tolist()
    return {
        "encoders": encoders,
        "combos": {",".join(str(m) for m in f): c.tolist() for f, c in sorted(code.combos.items())},
        "mask_coord": [c + 1 for c in code.mask_coord],
        "unmasked": [[m, k] for m, k in sorted(code.unmasked)],
    }


def _rate(rate: Rate) -> dict[str, Any]:
    return {**rational(rate.value), "unit": rate.unit}


def _rate_set(rates: RateBounds) -> dict[str, Any]:
    return {name: _rate(rate) for name, rate in rates.as_dict().items()}


def rates_document(report: RateReport, in_region: Mapping[str, bool]) -> dict[str, Any]:
    """Measured rates, bounds and the per-rate comparisons."""
    return {
        "measured": _rate_set(report.measured),
        "bounds": _rate_set(report.bounds),
        "achieves_optimum": dict(sorted(report.achieves_optimum.items())),
        "in_region": dict(sorted(in_region.items())),
        "client_symmetric": report.client_symmetric,
    }


def _mi(mi: MutualInformation | None) -> dict[str, Any] | None:
    if mi is None:
        return None
    return {"log_weights": {str(prime): rational(w) for prime, w in mi.weights.items()}, "bits": round(mi.bits(), 12)}


def audit_document(audit: SchemeAudit) -> dict[str, Any]:
    """Scheme audit: per-relay leakage, per-subset server accounting, oracle cross-checks."""
    return {
        "mode": audit.mode,
        "relay_leakage": list(audit.relay_leakage),
        "server": [
            {
                "v2": list(entry.v2),
                "leaked_dof": entry.leaked_dof,
                "key_cancelling_dof": entry.key_cancelling_dof,
                "sum_dof": entry.sum_dof,
            }
            for entry in audit.server
        ],
        "oracle": [
            {"party": check.party, "status": check.status, "mutual_information": _mi(check.mutual_information)}
            for check in audit.oracle
        ],
        "max_leakage": audit.max_leakage,
    }


def episode_document(episode: EpisodeResult) -> dict[str, Any]:
    """One episode: failures, relay sets, outcome, leakage."""
    real = episode.realization
    outcome: dict[str, Any]
    if isinstance(episode.outcome, AggregateResult):
        outcome = {
            "decoded": True,
            "integer_sum": list(episode.outcome.integer_sum),
            "pattern": list(episode.outcome.used_pattern),
            "padding": episode.outcome.padding,
            "oracle_match": episode.oracle_match,
        }
    else:
        outcome = {"decoded": False, "received": list(episode.outcome.received), "needed": episode.outcome.needed}
    return {
        "trial": episode.trial,
        "failed_c2r": [list(link) for link in sorted(real.failed_c2r)],
        "failed_r2s": sorted(real.failed_r2s),
        "V1": sorted(real.v1),
        "V2": sorted(real.v2),
        "outcome": outcome,
        "audit": {
            "relay_leakage": list(episode.audit.relay_leakage),
            "server_leaked_dof": episode.audit.server.leaked_dof,
            "key_cancelling_dof": episode.audit.server.key_cancelling_dof,
            "sum_dof": episode.audit.server.sum_dof,
        },
    }


# ==================================================================================================================== #
#                                                     SUMMARIES                                                        #
# ==================================================================================================================== #


def summarize_episodes(episodes: Sequence[EpisodeResult]) -> dict[str, Any]:
    """Decode counts, success fraction, relay-set size histograms and the worst leakage."""
    decoded = sum(1 for e in episodes if isinstance(e.outcome, AggregateResult))
    insufficient = sum(1 for e in episodes if isinstance(e.outcome, InsufficientRelays))
    mismatches = sum(1 for e in episodes if e.oracle_match is False)
    v1_sizes = Counter(len(e.realization.v1) for e in episodes)
    v2_sizes = Counter(len(e.realization.v2) for e in episodes)
    return {
        "episodes": len(episodes),
        "decoded": decoded,
        "insufficient_relays": insufficient,
        "oracle_mismatches": mismatches,
        "success_fraction": rational(Fraction(decoded, len(episodes))) if episodes else None,
        "v1_sizes": {str(size): count for size, count in sorted(v1_sizes.items())},
        "v2_sizes": {str(size): count for size, count in sorted(v2_sizes.items())},
        "max_leakage": max((e.audit.max_leakage for e in episodes), default=0),
    }


# ==================================================================================================================== #
#                                                      DOCUMENT                                                        #
# ==================================================================================================================== #


def build_report(
    config: ExperimentConfig,
    scheme: Scheme,
    episodes: Sequence[EpisodeResult],
    audit: SchemeAudit | None,
    rates: dict[str, Any] | None,
    verdicts: Mapping[str, bool],
) -> dict[str, Any]:
    """Assemble the report document."""
    code_doc = code_document(scheme.code)
    return {
        "config": config.as_dict(),
        "scheme": {
            "K": scheme.topology.K,
            "d": scheme.topology.d,
            "s": scheme.s,
            "p": scheme.cfg.p,
            "q": scheme.cfg.q,
            "segment_len": scheme.code.segment_len,
            "seed_len": scheme.G_S.cols,
            "construction_seed": scheme.seed,
            "attempts": scheme.attempts,
            "evaluation_points": None if scheme.code.points is None else list(scheme.code.points),
            "G_S": scheme.G_S.tolist(),
            "G_S_sha256": canonical_digest(scheme.G_S.tolist()),
            "code": code_doc,
            "code_sha256": canonical_digest(code_doc),
        },
        "episodes": [episode_document(e) for e in episodes],
        "summary": summarize_episodes(episodes),
        "audit": None if audit is None else audit_document(audit),
        "rates": rates,
        "verdicts": dict(sorted(verdicts.items())),
    }


def render_report(doc: Mapping[str, Any]) -> str:
    """Canonical text of a report (sorted keys, two-space indent, trailing newline)."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_report(doc: Mapping[str, Any], path: Path) -> Path:
    """Write ``doc`` to ``path`` (parents created) and return the path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(doc), encoding="utf-8")
    log.info("report written to %s", path)
    return path
