# src/resilient_hsa/netsim.py
"""Lossy links and episode orchestration.

A :class:`LinkRealization` says which client-to-relay links and which relay-to-server links failed. A relay that
misses any client stays silent (it is not in ``V1``); a relay in ``V1`` whose uplink fails is not in ``V2``. One
episode runs encode, drop, aggregate, drop, decode, then audits what every relay and the server observed.
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from itertools import chain, combinations, product
import logging
from typing import Literal

# 3rd party
import numpy as np

# Local
from resilient_hsa.constants import EXHAUSTIVE_MAX_K
from resilient_hsa.errors import HsaError, InvalidParamsError
from resilient_hsa.ff_core import FieldConfig
from resilient_hsa.gc_code import GcCode, Link
from resilient_hsa.keygen import KeySchedule
from resilient_hsa.metrics import RateReport, measured_rates
from resilient_hsa.protocol import (
    AggregateResult,
    ClientMessage,
    InsufficientRelaysError,
    LocalModel,
    RelayMessage,
    SegmentLayout,
    client_encode,
    plaintext_sum,
    relay_aggregate,
    server_decode,
)
from resilient_hsa.security_audit import (
    ServerAudit,
    relay_leakage,
    relay_observation,
    server_audit,
    server_observation,
    sum_target_matrix,
)
from resilient_hsa.topology import Topology

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)

type DropKind = Literal["none", "bernoulli", "fixed", "exhaustive"]


# ==================================================================================================================== #
#                                                   EXCEPTIONS                                                         #
# ==================================================================================================================== #
class BudgetExceededError(HsaError):
    """Raised when a sweep would need more episodes than allowed."""

    def __init__(self, needed: int, budget: int | None) -> None:
        """Initialize with the episode count and the budget.

        Args:
            needed: Episodes the sweep would run.
            budget: Allowed episodes (None means the exhaustive-size limit applied).
        """
        limit = f"budget {budget}" if budget is not None else f"exhaustive limit K <= {EXHAUSTIVE_MAX_K}"
        super().__init__(f"sweep needs {needed} episodes, exceeding the {limit}")
        self.needed: int = needed
        self.budget: int | None = budget


# ==================================================================================================================== #
#                                                     DATA TYPES                                                       #
# ==================================================================================================================== #


@dataclass(frozen=True, slots=True)
class DropModel:
    """How links fail.

    Attributes:
        kind: ``none``, ``bernoulli`` (independent draws), ``fixed`` (explicit failures) or ``exhaustive``.
        p_c2r: Client-to-relay failure probability (bernoulli).
        p_r2s: Relay-to-server failure probability (bernoulli).
        failed_c2r: Failed ``(client, relay)`` links (fixed).
        failed_r2s: Failed relay uplinks (fixed).
        r2s_max: Largest failed-uplink subset enumerated (exhaustive; None means all of them).
        c2r_depth: Largest number of simultaneous client-to-relay failures enumerated (exhaustive).
        seed: Seed of the bernoulli draws.
    """

    kind: DropKind = "none"
    p_c2r: float = 0.0
    p_r2s: float = 0.0
    failed_c2r: frozenset[Link] = frozenset()
    failed_r2s: frozenset[int] = frozenset()
    r2s_max: int | None = None
    c2r_depth: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate probabilities and depths.

        Raises:
            InvalidParamsError: On a probability outside ``[0, 1]`` or a negative depth.
        """
        for name, prob in (("p_c2r", self.p_c2r), ("p_r2s", self.p_r2s)):
            if not 0.0 <= prob <= 1.0:
                raise InvalidParamsError(f"{name} must lie in [0, 1], got {prob}")
        if self.c2r_depth < 0 or (self.r2s_max is not None and self.r2s_max < 0):
            raise InvalidParamsError("exhaustive depths must be non-negative")


@dataclass(frozen=True, slots=True)
class LinkRealization:
    """Failed links of one episode and the relay sets they imply."""

    failed_c2r: frozenset[Link]
    failed_r2s: frozenset[int]
    v1: frozenset[int]
    v2: frozenset[int]

    @classmethod
    def derive(cls, topo: Topology, failed_c2r: Iterable[Link], failed_r2s: Iterable[int]) -> LinkRealization:
        """Compute ``V1`` and ``V2`` from the failed links.

        Raises:
            InvalidParamsError: If a failure names a link or relay that does not exist.
        """
        c2r = frozenset(failed_c2r)
        r2s = frozenset(failed_r2s)
        unknown_links = c2r - set(topo.links())
        if unknown_links:
            raise InvalidParamsError(f"no such client-to-relay links: {sorted(unknown_links)}")
        unknown_relays = r2s - set(topo.nodes)
        if unknown_relays:
            raise InvalidParamsError(f"no such relays: {sorted(unknown_relays)}")
        broken = {m for (_, m) in c2r}
        v1 = frozenset(m for m in topo.nodes if m not in broken)
        return cls(failed_c2r=c2r, failed_r2s=r2s, v1=v1, v2=v1 - r2s)


@dataclass(frozen=True, slots=True)
class InsufficientRelays:
    """Recorded outcome of an episode whose server heard fewer than ``K - s`` relays."""

    received: tuple[int, ...]
    needed: int


@dataclass(frozen=True, slots=True)
class EpisodeAudit:
    """Leakage observed in one episode: one value per relay plus the server accounting."""

    relay_leakage: tuple[int, ...]
    server: ServerAudit

    @property
    def max_leakage(self) -> int:
        """Largest leaked dimension over all parties."""
        return max([*self.relay_leakage, self.server.leaked_dof])


@dataclass(frozen=True, slots=True)
class EpisodeResult:
    """Everything one episode produced.

    Attributes:
        trial: Index of the realization within its sweep.
        realization: Failed links and relay sets.
        outcome: Decoded sum, or the InsufficientRelays record.
        audit: Leakage values.
        measured: Rates of the scheme.
        oracle_match: Decoded integer sum equals the plaintext sum (None when nothing was decoded).
    """

    trial: int
    realization: LinkRealization
    outcome: AggregateResult | InsufficientRelays
    audit: EpisodeAudit
    measured: RateReport
    oracle_match: bool | None = field(default=None)

    @property
    def decoded(self) -> bool:
        """True when the server produced a sum."""
        return isinstance(self.outcome, AggregateResult)


# ==================================================================================================================== #
#                                                    REALIZATIONS                                                      #
# ==================================================================================================================== #


def _subsets[T](items: Sequence[T], max_size: int) -> Iterable[tuple[T, ...]]:
    return chain.from_iterable(combinations(items, size) for size in range(min(max_size, len(items)) + 1))


def enumerate_realizations(model: DropModel, topo: Topology) -> list[LinkRealization]:
    """All realizations of an exhaustive model, failed-link sets first, uplink subsets second."""
    r2s_max = topo.K if model.r2s_max is None else model.r2s_max
    return [
        LinkRealization.derive(topo, c2r, r2s)
        for c2r, r2s in product(_subsets(topo.links(), model.c2r_depth), list(_subsets(list(topo.nodes), r2s_max)))
    ]


def realize_links(model: DropModel, topo: Topology, trial: int) -> LinkRealization:
    """Realization number ``trial`` of ``model``; deterministic in ``(model, trial)``."""
    match model.kind:
        case "none":
            return LinkRealization.derive(topo, (), ())
        case "fixed":
            return LinkRealization.derive(topo, model.failed_c2r, model.failed_r2s)
        case "exhaustive":
            return enumerate_realizations(model, topo)[trial]
        case "bernoulli":
            rng = np.random.default_rng([model.seed, trial])
            links = topo.links()
            c2r_draws = rng.random(len(links))
            r2s_draws = rng.random(topo.K)
            failed_c2r = [link for link, u in zip(links, c2r_draws, strict=True) if u < model.p_c2r]
            failed_r2s = [m for m, u in zip(topo.nodes, r2s_draws, strict=True) if u < model.p_r2s]
            return LinkRealization.derive(topo, failed_c2r, failed_r2s)
    raise InvalidParamsError(f"unknown drop model kind {model.kind!r}")


# ==================================================================================================================== #
#                                                      EPISODES                                                        #
# ==================================================================================================================== #


def audit_observations(
    messages: Sequence[ClientMessage],
    forwarded: Sequence[RelayMessage],
    topo: Topology,
    layout: SegmentLayout,
    sched: KeySchedule,
    p: int,
) -> EpisodeAudit:
    """Leakage of every relay's full inbox and of the relay messages that reached the server."""
    relay_values = tuple(
        relay_leakage(relay_observation([msg for msg in messages if msg.relay == m], f"relay {m}"))
        for m in topo.nodes
    )
    v2 = sorted(msg.relay for msg in forwarded)
    obs = server_observation(forwarded, topo.K * layout.padded_len, sched.source_len, p, f"server V2={v2}")
    server = server_audit(obs, sum_target_matrix(topo.K, layout.padded_len, p))
    return EpisodeAudit(relay_leakage=relay_values, server=server)


def run_episode(
    cfg: FieldConfig,
    topo: Topology,
    sched: KeySchedule,
    code: GcCode,
    models: Sequence[LocalModel],
    realization: LinkRealization,
    trial: int = 0,
) -> EpisodeResult:
    """Encode, drop, aggregate, drop, decode, then audit.

    The audit runs whether or not the server could decode.

    Raises:
        InvalidParamsError: If the models do not cover every client with equal lengths.
    """
    if sorted(m.owner for m in models) != list(topo.nodes):
        raise InvalidParamsError(f"need exactly one model per client 1..{topo.K}")
    model_length = len(models[0])
    if any(len(m) != model_length for m in models):
        raise InvalidParamsError("all local models must share one length")
    for mdl in models:
        mdl.check_alphabet(cfg.q)
    layout = SegmentLayout(model_length, code.segment_len)

    messages = [msg for mdl in sorted(models, key=lambda x: x.owner) for msg in client_encode(mdl, sched, code, topo)]
    relay_messages: dict[int, RelayMessage] = {}
    for m in topo.nodes:
        inbox = [msg for msg in messages if msg.relay == m and (msg.client, m) not in realization.failed_c2r]
        y = relay_aggregate(m, inbox, topo)
        if y is not None:
            relay_messages[m] = y
    received = {m: y for m, y in relay_messages.items() if m not in realization.failed_r2s}

    outcome: AggregateResult | InsufficientRelays
    oracle_match: bool | None = None
    try:
        outcome = server_decode(received, code, cfg, model_length)
        oracle_match = outcome.integer_sum == plaintext_sum(models)
    except InsufficientRelaysError as exc:
        outcome = InsufficientRelays(received=exc.received, needed=exc.needed)

    audit = audit_observations(messages, list(received.values()), topo, layout, sched, cfg.p)
    if audit.max_leakage:
        log.warning("trial %d leaked %d dof (V2=%s)", trial, audit.max_leakage, sorted(realization.v2))
    log.debug("trial %d V1=%s V2=%s decoded=%s", trial, sorted(realization.v1), sorted(realization.v2), oracle_match)
    return EpisodeResult(
        trial=trial,
        realization=realization,
        outcome=outcome,
        audit=audit,
        measured=measured_rates(sched, code, cfg, topo, model_length),
        oracle_match=oracle_match,
    )


def sweep_patterns(
    cfg: FieldConfig,
    topo: Topology,
    sched: KeySchedule,
    code: GcCode,
    models: Sequence[LocalModel],
    drop: DropModel,
    budget: int | None = None,
) -> list[EpisodeResult]:
    """One episode per realization of ``drop``, ordered by trial index.

    Exhaustive models enumerate every realization and bernoulli models draw ``budget`` trials. ``none`` and
    ``fixed`` have a single realization, so they run one episode whatever the budget. A budget of 0 yields no
    episodes.

    Raises:
        BudgetExceededError: If an exhaustive sweep needs more episodes than ``budget``, or if ``K`` is too large for
            an exhaustive sweep without a budget.
    """
    if budget == 0:
        return []
    if drop.kind == "exhaustive":
        realizations = enumerate_realizations(drop, topo)
        if budget is None and topo.K > EXHAUSTIVE_MAX_K:
            raise BudgetExceededError(len(realizations), None)
        if budget is not None and len(realizations) > budget:
            raise BudgetExceededError(len(realizations), budget)
    elif drop.kind in ("none", "fixed"):
        if budget is not None and budget > 1:
            log.info("%s drop model has one realization; running 1 episode instead of %d", drop.kind, budget)
        realizations = [realize_links(drop, topo, 0)]
    else:
        realizations = [realize_links(drop, topo, t) for t in range(1 if budget is None else budget)]
    log.info("sweeping %d realizations (%s)", len(realizations), drop.kind)
    return [run_episode(cfg, topo, sched, code, models, r, trial=t) for t, r in enumerate(realizations)]
