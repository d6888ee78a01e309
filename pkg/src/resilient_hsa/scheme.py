# src/resilient_hsa/scheme.py
"""One verified scheme instance: topology, key generator and code for a parameter set.

:func:`build_scheme` derives independent sub-seeds for ``G_S`` and the code from ``(seed, attempt)`` and keeps the
first pair whose one-segment probe shows zero leakage at every relay and at the server hearing every relay. The
probe is sufficient for any model length (segments use disjoint model entries and disjoint source symbols) and for
any subset of reporting relays (a subset sees fewer key-cancelling combinations).
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from collections.abc import Callable
from dataclasses import dataclass, field
from itertools import combinations
import logging

# 3rd party
import numpy as np

# Local
from resilient_hsa.constants import EXHAUSTIVE_MAX_K, SAMPLED_REALIZATIONS, SCHEME_MAX_ATTEMPTS
from resilient_hsa.errors import ConstructionFailedError
from resilient_hsa.ff_core import FieldConfig, FieldMatrix, FieldVector
from resilient_hsa.gc_code import GcCode, construct_code
from resilient_hsa.keygen import (
    KeySchedule,
    SourceRandomness,
    build_gs,
    draw_source_randomness,
    expand_keys,
)
from resilient_hsa.netsim import EpisodeAudit, audit_observations
from resilient_hsa.protocol import (
    ClientMessage,
    LocalModel,
    RelayMessage,
    SegmentLayout,
    client_encode,
    relay_aggregate,
)
from resilient_hsa.security_audit import (
    MutualInformation,
    TooLargeError,
    brute_force_mi,
    relay_leakage,
    relay_observation,
    server_audit,
    server_observation,
    sum_target_matrix,
)
from resilient_hsa.topology import Topology, build_topology

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)


# ==================================================================================================================== #
#                                                       SCHEME                                                         #
# ==================================================================================================================== #


@dataclass(frozen=True, eq=False)
class Scheme:
    """Everything fixed before any model is seen.

    Attributes:
        cfg: Field parameters.
        topology: Cyclic association graph.
        code: Relay-to-server code.
        G_S: Key generator.
        seed: Construction seed (None for injected schemes).
        attempts: Construction attempts spent (1 for injected schemes).
    """

    cfg: FieldConfig
    topology: Topology
    code: GcCode
    G_S: FieldMatrix
    seed: int | None = None
    attempts: int = 1

    @property
    def s(self) -> int:
        """Straggler tolerance."""
        return self.code.s

    def layout(self, model_length: int) -> SegmentLayout:
        """Segment layout of a length-``model_length`` model."""
        return SegmentLayout(model_length, self.code.segment_len)


# ==================================================================================================================== #
#                                                    SYMBOLIC RUNS                                                     #
# ==================================================================================================================== #


def symbolic_messages(
    cfg: FieldConfig,
    topo: Topology,
    code: GcCode,
    G: FieldMatrix,  # noqa: N803
    model_length: int,
) -> tuple[KeySchedule, list[ClientMessage], dict[int, RelayMessage]]:
    """Messages of a run with all-zero models and keys and no failed link; only their traces matter."""
    layout = SegmentLayout(model_length, code.segment_len)
    zero_source = SourceRandomness(FieldVector.zeros(layout.segments * G.cols, cfg.p), seed_len=G.cols)
    sched = expand_keys(G, zero_source, layout.segments)
    models = [LocalModel(owner=k, entries=(0,) * model_length) for k in topo.nodes]
    messages = [msg for mdl in models for msg in client_encode(mdl, sched, code, topo)]
    relays: dict[int, RelayMessage] = {}
    for m in topo.nodes:
        y = relay_aggregate(m, [msg for msg in messages if msg.relay == m], topo)
        if y is not None:
            relays[m] = y
    return sched, messages, relays


def probe_audit(cfg: FieldConfig, topo: Topology, code: GcCode, G: FieldMatrix) -> EpisodeAudit:  # noqa: N803
    """Leakage of a one-segment run in which every link works."""
    width = code.segment_len
    sched, messages, relays = symbolic_messages(cfg, topo, code, G, width)
    return audit_observations(messages, list(relays.values()), topo, SegmentLayout(width, width), sched, cfg.p)


def build_scheme(cfg: FieldConfig, d: int, s: int, seed: int) -> Scheme:
    """Construct a scheme whose probe audit shows no leakage.

    Raises:
        InvalidParamsError: On invalid ``(K, d, s)`` (propagated from the constructions).
        ConstructionFailedError: If no attempt passes within the budget.
    """
    topo = build_topology(cfg.K, d)
    for attempt in range(SCHEME_MAX_ATTEMPTS):
        gs_seed, code_seed = (int(x) for x in np.random.SeedSequence([seed, attempt]).generate_state(2))
        G = build_gs(cfg, d, gs_seed)  # noqa: N806
        code = construct_code(cfg, topo, s, code_seed)
        audit = probe_audit(cfg, topo, code, G)
        if audit.max_leakage == 0:
            log.info("scheme K=%d d=%d s=%d p=%d ready after %d attempt(s)", cfg.K, d, s, cfg.p, attempt + 1)
            return Scheme(cfg=cfg, topology=topo, code=code, G_S=G, seed=seed, attempts=attempt + 1)
        log.debug("scheme attempt %d leaks %d dof, retrying", attempt, audit.max_leakage)
    raise ConstructionFailedError("scheme", SCHEME_MAX_ATTEMPTS, cfg.p)


# ==================================================================================================================== #
#                                                      DRAWS                                                           #
# ==================================================================================================================== #


def draw_models(cfg: FieldConfig, model_length: int, seed: int) -> list[LocalModel]:
    """``K`` local models with entries uniform over ``{0, ..., q-1}``."""
    rng = np.random.default_rng(seed)
    grid = rng.integers(0, cfg.q, size=(cfg.K, model_length), dtype=np.int64)
    return [LocalModel(owner=k + 1, entries=tuple(int(v) for v in grid[k])) for k in range(cfg.K)]


def draw_source(scheme: Scheme, model_length: int, seed: int) -> tuple[SourceRandomness, KeySchedule]:
    """Source pool for a length-``model_length`` model and the keys it expands to."""
    segments = scheme.layout(model_length).segments
    src = draw_source_randomness(scheme.cfg.p, scheme.G_S.cols, segments, seed)
    return src, expand_keys(scheme.G_S, src, segments)


# ==================================================================================================================== #
#                                                    SCHEME AUDIT                                                      #
# ==================================================================================================================== #


@dataclass(frozen=True, slots=True)
class OracleCheck:
    """Brute-force cross-check of one rank verdict.

    Attributes:
        party: Observer label.
        status: ``agreement``, ``disagreement`` or ``skipped`` (enumeration too large).
        mutual_information: Exact value when computed.
    """

    party: str
    status: str
    mutual_information: MutualInformation | None = None


@dataclass(frozen=True, slots=True)
class ServerSubsetAudit:
    """Server accounting for one set of reporting relays."""

    v2: tuple[int, ...]
    leaked_dof: int
    key_cancelling_dof: int
    sum_dof: int


@dataclass(frozen=True)
class SchemeAudit:
    """Every audit of one scheme at one model length.

    Attributes:
        relay_leakage: Leaked dimension per relay (index ``m - 1``).
        server: One entry per audited set of reporting relays.
        mode: ``exhaustive`` (every relay subset) or ``sampled``.
        oracle: Brute-force cross-checks, one per relay plus the server hearing every relay.
    """

    relay_leakage: tuple[int, ...]
    server: tuple[ServerSubsetAudit, ...]
    mode: str
    oracle: tuple[OracleCheck, ...] = field(default=())

    @property
    def max_leakage(self) -> int:
        """Largest leaked dimension over every audited party."""
        return max([*self.relay_leakage, *(entry.leaked_dof for entry in self.server)])

    @property
    def secure(self) -> bool:
        """Nothing leaks and no oracle disagrees."""
        return self.max_leakage == 0 and all(check.status != "disagreement" for check in self.oracle)


def _relay_subsets(K: int, seed: int) -> tuple[list[tuple[int, ...]], str]:  # noqa: N803
    nodes = list(range(1, K + 1))
    if K <= EXHAUSTIVE_MAX_K:
        return [c for size in range(K + 1) for c in combinations(nodes, size)], "exhaustive"
    rng = np.random.default_rng([seed, K])
    draws = rng.random((SAMPLED_REALIZATIONS, K)) < 0.5  # noqa: PLR2004
    return [tuple(m for m, keep in zip(nodes, row, strict=True) if keep) for row in draws], "sampled"


def _oracle(party: str, leaked: int, compute: Callable[[], MutualInformation]) -> OracleCheck:
    try:
        mi = compute()
    except TooLargeError:
        return OracleCheck(party=party, status="skipped")
    status = "agreement" if (leaked == 0) == mi.is_zero() else "disagreement"
    if status == "disagreement":
        log.warning("%s: rank audit says %d dof, brute force says %s", party, leaked, mi.weights)
    return OracleCheck(party=party, status=status, mutual_information=mi)


def audit_scheme(scheme: Scheme, model_length: int, seed: int = 0, brute_force: bool = True) -> SchemeAudit:
    """Relay leakage for every relay, server leakage for every (or sampled) set of reporting relays.

    When ``brute_force`` is set, every relay and the server hearing all relays are cross-checked by enumeration
    wherever the enumeration fits its limit; the rest are marked ``skipped``.
    """
    cfg, topo = scheme.cfg, scheme.topology
    layout = scheme.layout(model_length)
    sched, messages, relays = symbolic_messages(cfg, topo, scheme.code, scheme.G_S, model_length)
    theta_cols = topo.K * layout.padded_len
    targets = sum_target_matrix(topo.K, layout.padded_len, cfg.p)

    relay_obs = [relay_observation([msg for msg in messages if msg.relay == m], f"relay {m}") for m in topo.nodes]
    relay_values = tuple(relay_leakage(obs) for obs in relay_obs)

    subsets, mode = _relay_subsets(topo.K, seed)
    server_entries: list[ServerSubsetAudit] = []
    for v2 in subsets:
        obs = server_observation([relays[m] for m in v2], theta_cols, sched.source_len, cfg.p, f"server V2={list(v2)}")
        result = server_audit(obs, targets)
        server_entries.append(
            ServerSubsetAudit(
                v2=v2,
                leaked_dof=result.leaked_dof,
                key_cancelling_dof=result.key_cancelling_dof,
                sum_dof=result.sum_dof,
            )
        )

    oracle: list[OracleCheck] = []
    if brute_force:
        for obs, leaked in zip(relay_obs, relay_values, strict=True):
            oracle.append(_oracle(obs.label, leaked, lambda o=obs: brute_force_mi(o, cfg, cfg.q)))
        full = server_observation(relays.values(), theta_cols, sched.source_len, cfg.p, "server, all relays")
        full_leak = server_audit(full, targets).leaked_dof
        oracle.append(_oracle(full.label, full_leak, lambda: brute_force_mi(full, cfg, cfg.q, targets)))

    audit = SchemeAudit(relay_leakage=relay_values, server=tuple(server_entries), mode=mode, oracle=tuple(oracle))
    log.info("audit (%s, %d relay subsets): max leakage %d", mode, len(server_entries), audit.max_leakage)
    return audit
