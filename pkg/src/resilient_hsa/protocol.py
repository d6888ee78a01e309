# src/resilient_hsa/protocol.py
"""Client encode, relay aggregate, server decode.

Every message carries a symbolic :class:`CoefficientTrace`: one row per transmitted symbol, split into its
coefficients on the model entries (``theta`` side) and on the source symbols (``z`` side). Evaluating a trace on
the episode's models and source pool reproduces the payload; the security audit works on traces alone.

Column layout of the ``theta`` side: client ``k``'s padded model occupies columns ``(k - 1) * L_pad .. k * L_pad``.
The ``z`` side follows :class:`~resilient_hsa.keygen.SourceRandomness` (segment-major).
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
import logging

# 3rd party
import numpy as np

# Local
from resilient_hsa.errors import HsaError, InvalidParamsError
from resilient_hsa.ff_core import FieldConfig, FieldMatrix, FieldVector
from resilient_hsa.gc_code import GcCode, Pattern, select_pattern
from resilient_hsa.keygen import KeySchedule
from resilient_hsa.topology import Topology

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)


# ==================================================================================================================== #
#                                                   EXCEPTIONS                                                         #
# ==================================================================================================================== #
class ShapeMismatchError(HsaError, ValueError):
    """Raised when a model, schedule and code disagree on lengths."""

    def __init__(self, what: str, expected: int, actual: int) -> None:
        """Initialize with the mismatching quantity.

        Args:
            what: Name of the quantity, e.g. ``"segments"``.
            expected: Value implied by the scheme.
            actual: Value found.
        """
        super().__init__(f"{what}: expected {expected}, got {actual}")
        self.what: str = what
        self.expected: int = expected
        self.actual: int = actual


class InsufficientRelaysError(HsaError):
    """Raised by :func:`server_decode` when fewer than ``K - s`` relays reported."""

    def __init__(self, received: Iterable[int], needed: int) -> None:
        """Initialize with the reporting relays and the decoding threshold.

        Args:
            received: Relay ids whose message arrived.
            needed: ``K - s``.
        """
        self.received: tuple[int, ...] = tuple(sorted(received))
        self.needed: int = needed
        super().__init__(f"{len(self.received)} relays reported {list(self.received)}, decoding needs {needed}")


class OutOfRangeError(HsaError, ValueError):
    """Raised when a value leaves its admissible range (model entry >= q, or a lifted sum above K(q-1))."""

    def __init__(self, what: str, value: int, bound: int) -> None:
        """Initialize with the offending value and the largest admissible one.

        Args:
            what: Where the value came from.
            value: Offending value.
            bound: Largest admissible value.
        """
        super().__init__(f"{what}: {value} exceeds {bound}")
        self.what: str = what
        self.value: int = value
        self.bound: int = bound


# ==================================================================================================================== #
#                                                     DATA TYPES                                                       #
# ==================================================================================================================== #


@dataclass(frozen=True, slots=True)
class SegmentLayout:
    """How a length-``L`` model is cut into segments of ``width = d - s`` entries.

    Models are padded with trailing zeros up to ``padded_len``, a multiple of ``width``.
    """

    model_len: int
    width: int

    @property
    def segments(self) -> int:
        """``L_X``."""
        return -(-self.model_len // self.width)

    @property
    def padded_len(self) -> int:
        """``L_X * width``."""
        return self.segments * self.width

    @property
    def padding(self) -> int:
        """Trailing zeros appended to every model."""
        return self.padded_len - self.model_len


@dataclass(frozen=True, slots=True)
class LocalModel:
    """One client's model; entries live in ``{0, ..., q-1}``."""

    owner: int
    entries: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def check_alphabet(self, q: int) -> None:
        """Raise OutOfRangeError unless every entry lies in ``{0, ..., q-1}``."""
        for value in self.entries:
            if not 0 <= value < q:
                raise OutOfRangeError(f"model entry of client {self.owner}", value, q - 1)

    def padded(self, layout: SegmentLayout) -> list[int]:
        """Entries followed by the layout's zero padding."""
        return [*self.entries, *([0] * layout.padding)]


@dataclass(frozen=True, slots=True)
class CoefficientTrace:
    """Symbolic form of a message: ``payload = theta @ Theta + z @ Z`` row by row."""

    theta: FieldMatrix
    z: FieldMatrix

    def __add__(self, other: CoefficientTrace) -> CoefficientTrace:
        return CoefficientTrace(self.theta + other.theta, self.z + other.z)

    def evaluate(self, theta: FieldVector, z: FieldVector) -> FieldVector:
        """Payload implied by the trace for the given models and source symbols."""
        return (self.theta @ theta) + (self.z @ z)


@dataclass(frozen=True, slots=True)
class ClientMessage:
    """``X_{relay, client}``: one symbol per segment."""

    client: int
    relay: int
    payload: FieldVector
    trace: CoefficientTrace


@dataclass(frozen=True, slots=True)
class RelayMessage:
    """``Y_relay``: the segment-wise sum of the relay's full inbox."""

    relay: int
    payload: FieldVector
    trace: CoefficientTrace


@dataclass(frozen=True, slots=True)
class AggregateResult:
    """Decoded sum of all models.

    Attributes:
        finite_sum: Sum over Z_p, length ``L``.
        integer_sum: Lifted integer sum, entries in ``{0, ..., K(q-1)}``.
        used_pattern: Straggler pattern whose ``C_f`` was applied.
        padding: Zeros appended per model before encoding (and dropped after decoding).
    """

    finite_sum: FieldVector
    integer_sum: tuple[int, ...]
    used_pattern: Pattern
    padding: int = 0


# ==================================================================================================================== #
#                                                      HELPERS                                                         #
# ==================================================================================================================== #


def theta_vector(models: Sequence[LocalModel], layout: SegmentLayout, p: int) -> FieldVector:
    """All padded models concatenated in client order (the ``theta`` side of every trace)."""
    ordered = sorted(models, key=lambda mdl: mdl.owner)
    return FieldVector([v for mdl in ordered for v in mdl.padded(layout)], p)


def plaintext_sum(models: Sequence[LocalModel]) -> tuple[int, ...]:
    """Entry-wise integer sum of the models."""
    return tuple(int(v) for v in np.sum(np.array([m.entries for m in models], dtype=np.int64), axis=0))


# ==================================================================================================================== #
#                                                    CLIENT SIDE                                                       #
# ==================================================================================================================== #


def client_encode(model: LocalModel, sched: KeySchedule, code: GcCode, topo: Topology) -> list[ClientMessage]:
    """Encode one client's model for every relay in ``R_k``.

    Per segment ``l``: ``X_{m,k}(l) = w_{m,k} . segment_l + kappa_{m,k} * S_k(l)``, where ``kappa`` is the encoder
    entry at the client's mask coordinate.

    Raises:
        ShapeMismatchError: If the schedule, code and topology disagree with the model's length.
    """
    if code.topology != topo:
        raise InvalidParamsError(f"code was built for K={code.K} d={code.d}, topology has K={topo.K} d={topo.d}")
    layout = SegmentLayout(len(model), code.segment_len)
    if sched.segments != layout.segments:
        raise ShapeMismatchError("segments", layout.segments, sched.segments)
    if len(sched.keys) != topo.K:
        raise ShapeMismatchError("keys", topo.K, len(sched.keys))

    p = code.p
    k = model.owner
    segments = np.array(model.padded(layout), dtype=np.int64).reshape(layout.segments, layout.width)
    key = sched.key_of(k)
    theta_cols = topo.K * layout.padded_len
    z_rows = FieldMatrix.vstack([sched.key_coefficients(k, l).as_row() for l in range(layout.segments)], p)  # noqa: E741

    messages: list[ClientMessage] = []
    for m in topo.relays_of(k):
        w = code.encoder(m, k)
        kappa = code.mask_coefficient(m, k)
        payload = FieldVector(segments @ w.array + kappa * key.array, p)
        theta_rows = np.zeros((layout.segments, theta_cols), dtype=np.int64)
        offset = (k - 1) * layout.padded_len
        for l in range(layout.segments):  # noqa: E741
            start = offset + l * layout.width
            theta_rows[l, start : start + layout.width] = w.array
        trace = CoefficientTrace(FieldMatrix(theta_rows, p), z_rows.scale(kappa))
        messages.append(ClientMessage(client=k, relay=m, payload=payload, trace=trace))
    return messages


# ==================================================================================================================== #
#                                                     RELAY SIDE                                                       #
# ==================================================================================================================== #


def relay_aggregate(relay: int, inbox: Iterable[ClientMessage], topo: Topology) -> RelayMessage | None:
    """Sum a complete inbox segment-wise; a relay missing any of ``U_m`` stays silent (returns None).

    Raises:
        InvalidParamsError: If a message is addressed to another relay.
    """
    by_client: dict[int, ClientMessage] = {}
    for msg in inbox:
        if msg.relay != relay:
            raise InvalidParamsError(f"relay {relay} received a message addressed to relay {msg.relay}")
        by_client[msg.client] = msg
    expected = topo.clients_of(relay)
    if any(k not in by_client for k in expected):
        log.debug("relay %d silent: heard %s of %s", relay, sorted(by_client), list(expected))
        return None
    parts = [by_client[k] for k in expected]
    payload = parts[0].payload
    trace = parts[0].trace
    for msg in parts[1:]:
        payload = payload + msg.payload
        trace = trace + msg.trace
    return RelayMessage(relay=relay, payload=payload, trace=trace)


# ==================================================================================================================== #
#                                                    SERVER SIDE                                                       #
# ==================================================================================================================== #


def server_decode(
    received: Mapping[int, RelayMessage], code: GcCode, cfg: FieldConfig, model_length: int
) -> AggregateResult:
    """Recover the sum of all models from the relays in ``received`` (keyed by relay id).

    Raises:
        InvalidParamsError: If a key is not a relay id or disagrees with its message's sender.
        InsufficientRelaysError: If fewer than ``K - s`` relays reported.
        OutOfRangeError: If the lifted sum leaves ``{0, ..., K(q-1)}``.
    """
    unknown = sorted(set(received) - set(code.topology.nodes))
    if unknown:
        raise InvalidParamsError(f"no such relays: {unknown} (relays are 1..{code.K})")
    mislabelled = sorted(m for m, msg in received.items() if msg.relay != m)
    if mislabelled:
        raise InvalidParamsError(f"messages filed under relays {mislabelled} were sent by other relays")
    needed = code.K - code.s
    if len(received) < needed:
        raise InsufficientRelaysError(received.keys(), needed)
    layout = SegmentLayout(model_length, code.segment_len)
    missing = frozenset(code.topology.nodes) - frozenset(received)
    pattern = select_pattern(code, missing)
    c = code.combos[pattern]

    y = np.zeros((code.K, layout.segments), dtype=np.int64)
    for m, msg in received.items():
        if len(msg.payload) != layout.segments:
            raise ShapeMismatchError(f"Y_{m} length", layout.segments, len(msg.payload))
        y[m - 1] = msg.payload.array
    decoded = c @ FieldMatrix(y, code.p)  # width x L_X
    flat = FieldVector(decoded.array.T.reshape(-1)[:model_length], code.p)
    return AggregateResult(
        finite_sum=flat,
        integer_sum=lift_to_integers(flat, cfg),
        used_pattern=pattern,
        padding=layout.padding,
    )


def lift_to_integers(finite_sum: FieldVector, cfg: FieldConfig) -> tuple[int, ...]:
    """Canonical representatives of a field sum, checked against ``K(q-1)``.

    Raises:
        OutOfRangeError: If an entry exceeds ``K(q-1)``.
    """
    lifted = tuple(finite_sum.tolist())
    for value in lifted:
        if value > cfg.max_sum:
            raise OutOfRangeError("lifted sum", value, cfg.max_sum)
    return lifted

