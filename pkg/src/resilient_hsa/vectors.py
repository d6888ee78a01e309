# src/resilient_hsa/vectors.py
"""Worked-example vectors (K=5, d=3, s=1, L=2, q=3, p=13) and the golden check that replays them.

The packaged file lists the key generator, every encoder ``w_{m,k}``, the five combination matrices and the
expected symbolic form of every client and relay message. :func:`verify_example` rebuilds the scheme from the file
and walks the checks in a fixed order, stopping at the first mismatch.
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from dataclasses import dataclass, field
from fractions import Fraction
from importlib.resources import files as resources_files
import json
import logging
from typing import TYPE_CHECKING, Any

# Local
from resilient_hsa.constants import EXAMPLE_VECTORS_RESOURCE_PATH
from resilient_hsa.errors import InvalidParamsError, VerificationError
from resilient_hsa.ff_core import FieldConfig, FieldMatrix, FieldVector
from resilient_hsa.gc_code import GcCode, Link, Pattern, combination_matrix, pattern_recovers, select_pattern
from resilient_hsa.keygen import verify_gs
from resilient_hsa.metrics import RateReport, check_in_region, measured_rates
from resilient_hsa.protocol import (
    ClientMessage,
    RelayMessage,
    SegmentLayout,
    client_encode,
    plaintext_sum,
    relay_aggregate,
    server_decode,
)
from resilient_hsa.scheme import Scheme, draw_models, draw_source, symbolic_messages
from resilient_hsa.security_audit import server_audit, server_observation, sum_target_matrix
from resilient_hsa.topology import build_topology

# --------------------------------------------------- BASEDPYRIGHT --------------------------------------------------- #
# Imported only for static checkers; not used at runtime.
if TYPE_CHECKING:
    from pathlib import Path

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)


# ==================================================================================================================== #
#                                                     DATA TYPES                                                       #
# ==================================================================================================================== #


@dataclass(frozen=True, eq=False)
class ExampleVectors:
    """Parsed vector file. Ids are 1-based; ``mask_coord`` is stored 0-based."""

    p: int
    K: int
    d: int
    s: int
    q: int
    L: int
    G_S: FieldMatrix
    encoders: dict[Link, FieldVector]
    combos: dict[Pattern, FieldMatrix]
    mask_coord: tuple[int, ...]
    expected_x: dict[Link, tuple[list[int], int]]
    expected_y: dict[int, tuple[dict[int, list[int]], dict[int, int]]]
    key_mixing: FieldMatrix
    expected_decodes: list[tuple[frozenset[int], Pattern]]
    rates: dict[str, Fraction]
    raw: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class ExampleCheck:
    """Outcome of a successful :func:`verify_example`."""

    checks: tuple[str, ...]
    decodes_verified: int
    rates: RateReport


# ==================================================================================================================== #
#                                                       LOADING                                                        #
# ==================================================================================================================== #


def _pattern(text: str) -> Pattern:
    return tuple(sorted(int(x) for x in text.split(",") if x.strip()))


def parse_vectors(raw: dict[str, Any]) -> ExampleVectors:
    """Build :class:`ExampleVectors` from the decoded JSON document.

    Raises:
        InvalidParamsError: If a required key is missing or malformed.
    """
    try:
        p = int(raw["p"])
        messages = raw["expected_messages"]
        return ExampleVectors(
            p=p,
            K=int(raw["K"]),
            d=int(raw["d"]),
            s=int(raw["s"]),
            q=int(raw["q"]),
            L=int(raw["L"]),
            G_S=FieldMatrix(raw["G_S"], p),
            encoders={
                (int(m), int(k)): FieldVector(w, p) for m, row in raw["encoders"].items() for k, w in row.items()
            },
            combos={_pattern(f): FieldMatrix(c, p) for f, c in raw["combos"].items()},
            mask_coord=tuple(int(x) - 1 for x in raw["mask_coord"]),
            expected_x={
                (int(pair.split(",")[0]), int(pair.split(",")[1])): (list(v["theta"]), int(v["key"]))
                for pair, v in messages["X"].items()
            },
            expected_y={
                int(m): (
                    {int(k): list(t) for k, t in v["theta"].items()},
                    {int(k): int(c) for k, c in v["key"].items()},
                )
                for m, v in messages["Y"].items()
            },
            key_mixing=FieldMatrix(messages["S^Y"], p),
            expected_decodes=[
                (frozenset(int(x) for x in dec["missing"]), tuple(int(x) for x in dec["pattern"]))
                for dec in raw["expected_decodes"]
            ],
            rates={name: Fraction(int(nd[0]), int(nd[1])) for name, nd in raw["rates"].items()},
            raw=raw,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InvalidParamsError(f"malformed vector file: {exc!r}") from exc


def load_vectors(path: Path | None = None) -> ExampleVectors:
    """Load a vector file, or the packaged worked example when ``path`` is None."""
    if path is None:
        pkg, subdir, filename = EXAMPLE_VECTORS_RESOURCE_PATH
        text = (resources_files(pkg) / subdir / filename).read_text(encoding="utf-8")
    else:
        text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParamsError(f"vector file is not valid JSON: {exc.msg}") from exc
    return parse_vectors(raw)


def example_scheme(vectors: ExampleVectors) -> Scheme:
    """Scheme with the file's generator and code injected (no randomness involved)."""
    cfg = FieldConfig(p=vectors.p, q=vectors.q, K=vectors.K)
    topo = build_topology(vectors.K, vectors.d)
    code = GcCode(
        topology=topo,
        s=vectors.s,
        p=vectors.p,
        encoders=dict(vectors.encoders),
        combos=dict(vectors.combos),
        mask_coord=vectors.mask_coord,
    )
    return Scheme(cfg=cfg, topology=topo, code=code, G_S=vectors.G_S, seed=None, attempts=1)


# ==================================================================================================================== #
#                                                     VERIFICATION                                                     #
# ==================================================================================================================== #


def _symbolic_run(scheme: Scheme, model_length: int) -> tuple[list[ClientMessage], dict[int, RelayMessage]]:
    _, messages, relays = symbolic_messages(scheme.cfg, scheme.topology, scheme.code, scheme.G_S, model_length)
    return messages, relays


def _client_block(row: FieldVector, client: int, padded_len: int) -> list[int]:
    """Coefficients on ``client``'s padded model within a theta row."""
    start = (client - 1) * padded_len
    return row.tolist()[start : start + padded_len]


def _check_messages(vectors: ExampleVectors, scheme: Scheme) -> list[str]:
    layout = SegmentLayout(vectors.L, scheme.code.segment_len)
    messages, relays = _symbolic_run(scheme, vectors.L)
    g = scheme.G_S
    passed: list[str] = []

    by_link = {(msg.relay, msg.client): msg for msg in messages}
    for (m, k), (theta, key) in sorted(vectors.expected_x.items(), key=lambda item: (item[0][1], item[0][0])):
        name = f"X_{m},{k}"
        msg = by_link.get((m, k))
        if msg is None:
            raise VerificationError(name, f"client {k} does not transmit to relay {m}")
        found = _client_block(msg.trace.theta.row(0), k, layout.padded_len)
        if found != [x % vectors.p for x in theta]:
            raise VerificationError(name, f"model coefficients {found}, expected {theta}")
        if msg.trace.z.row(0) != g.row(k - 1).scale(key):
            raise VerificationError(name, f"key coefficient differs from {key}")
        passed.append(name)

    for m, (theta_by_client, key_by_client) in sorted(vectors.expected_y.items()):
        name = f"Y_{m}"
        y = relays[m]
        row = y.trace.theta.row(0)
        for k in scheme.topology.nodes:
            expected = theta_by_client.get(k, [0] * layout.padded_len)
            found = _client_block(row, k, layout.padded_len)
            if found != [x % vectors.p for x in expected]:
                raise VerificationError(name, f"client {k} coefficients {found}, expected {expected}")
        expected_key = FieldVector.zeros(g.cols, g.p)
        for k, c in key_by_client.items():
            expected_key = expected_key + g.row(k - 1).scale(c)
        if y.trace.z.row(0) != expected_key:
            raise VerificationError(name, f"key part {y.trace.z.row(0).tolist()}, expected {expected_key.tolist()}")
        passed.append(name)

    mixing = FieldMatrix.vstack([relays[m].trace.z for m in sorted(relays)], g.p)
    if mixing != vectors.key_mixing:
        raise VerificationError("S^Y", f"key-mixing matrix {mixing.tolist()}, expected {vectors.key_mixing.tolist()}")
    obs = server_observation(relays.values(), scheme.topology.K * layout.padded_len, mixing.cols, g.p, "server, all relays")
    audit = server_audit(obs, sum_target_matrix(scheme.topology.K, layout.padded_len, g.p))
    if audit.leaked_dof != 0:
        raise VerificationError("S^Y", f"server learns {audit.leaked_dof} dof beyond the sum")
    passed.append("S^Y")
    return passed


def _check_decodes(vectors: ExampleVectors, scheme: Scheme) -> int:
    _, relays = _symbolic_run(scheme, vectors.L)
    layout = SegmentLayout(vectors.L, scheme.code.segment_len)
    p = scheme.cfg.p
    target = sum_target_matrix(scheme.topology.K, layout.padded_len, p)
    y_theta = FieldMatrix.vstack([relays[m].trace.theta for m in scheme.topology.nodes], p)
    y_key = FieldMatrix.vstack([relays[m].trace.z for m in scheme.topology.nodes], p)

    models = draw_models(scheme.cfg, vectors.L, seed=0)
    _, sched = draw_source(scheme, vectors.L, seed=0)
    messages = [msg for mdl in models for msg in client_encode(mdl, sched, scheme.code, scheme.topology)]
    live: dict[int, RelayMessage] = {}
    for m in scheme.topology.nodes:
        y = relay_aggregate(m, [msg for msg in messages if msg.relay == m], scheme.topology)
        if y is not None:
            live[m] = y

    for missing, pattern in vectors.expected_decodes:
        name = f"decode missing {set(missing)}"
        chosen = select_pattern(scheme.code, missing)
        if chosen != pattern:
            raise VerificationError(name, f"selected pattern {chosen}, expected {pattern}")
        c = combination_matrix(scheme.code, missing)
        if c @ y_theta != target:
            raise VerificationError(name, "combination does not yield the sum of every model entry")
        if not (c @ y_key).is_zero():
            raise VerificationError(name, "keys do not cancel")
        received = {m: y for m, y in live.items() if m not in missing}
        result = server_decode(received, scheme.code, scheme.cfg, vectors.L)
        if result.integer_sum != plaintext_sum(models):
            raise VerificationError(name, f"decoded {list(result.integer_sum)}, expected {list(plaintext_sum(models))}")
    return len(vectors.expected_decodes)


def verify_example(vectors: ExampleVectors) -> ExampleCheck:
    """Replay the worked example and check every artifact in order.

    Order: ``verify_gs``, ``C_<f>``, ``X_<m>,<k>``, ``Y_<m>``, ``S^Y``, ``decode missing {m}``, ``rates``.

    Raises:
        VerificationError: At the first mismatch, naming the artifact.
    """
    scheme = example_scheme(vectors)
    checks: list[str] = []

    if not verify_gs(vectors.G_S, vectors.d):
        raise VerificationError("verify_gs", "zero column sums or the rank conditions do not hold")
    checks.append("verify_gs")

    for f in sorted(vectors.combos):
        name = "C_" + ",".join(str(m) for m in f)
        if not pattern_recovers(scheme.code, f):
            raise VerificationError(name, "does not recover the sum of every coordinate")
        checks.append(name)

    checks.extend(_check_messages(vectors, scheme))
    decodes = _check_decodes(vectors, scheme)
    checks.append(f"{decodes} decodes")

    _, sched = draw_source(scheme, vectors.L, seed=0)
    report = measured_rates(sched, scheme.code, scheme.cfg, scheme.topology, vectors.L)
    measured = report.measured.as_dict()
    for name, value in vectors.rates.items():
        if measured[name].value != value:
            raise VerificationError("rates", f"{name} = {measured[name].value}, expected {value}")
    if not all(check_in_region(report).values()):
        raise VerificationError("rates", "a measured rate lies below its bound")
    checks.append("rates")
    log.info("worked example verified: %d checks, %d decodes", len(checks), decodes)
    return ExampleCheck(checks=tuple(checks), decodes_verified=decodes, rates=report)
