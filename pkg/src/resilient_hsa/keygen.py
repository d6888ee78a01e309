# src/resilient_hsa/keygen.py
"""Zero-sum secret keys derived from a pool of uniform source symbols.

The generator ``G_S`` (K rows, ``L_seed = max(d, K - d)`` columns) turns each segment's slice of source symbols
``Z`` into one key symbol per client. Its column sums vanish, so the K keys of a segment add up to zero, and its
rank profile (any ``d`` rows have rank ``d``; any ``K - d`` rows have rank ``K - d``) keeps every relay's view of
the keys uniform.
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from dataclasses import dataclass
from itertools import combinations
import logging

# 3rd party
import numpy as np

# Local
from resilient_hsa.constants import GS_MAX_ATTEMPTS
from resilient_hsa.errors import ConstructionFailedError, HsaError, InvalidParamsError
from resilient_hsa.ff_core import FieldConfig, FieldMatrix, FieldVector, mat_rank

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)


# ==================================================================================================================== #
#                                                   EXCEPTIONS                                                         #
# ==================================================================================================================== #
class LengthMismatchError(HsaError, ValueError):
    """Raised when the source pool does not hold exactly ``L_X * L_seed`` symbols."""

    def __init__(self, expected: int, actual: int) -> None:
        """Initialize with the expected and actual pool sizes.

        Args:
            expected: ``L_X * L_seed``.
            actual: Number of symbols supplied.
        """
        super().__init__(f"source randomness must hold {expected} symbols, got {actual}")
        self.expected: int = expected
        self.actual: int = actual


# ==================================================================================================================== #
#                                                     DATA TYPES                                                       #
# ==================================================================================================================== #


@dataclass(frozen=True, slots=True)
class SourceRandomness:
    """The i.i.d. uniform pool ``Z``, laid out segment by segment (``L_seed`` symbols per segment).

    Attributes:
        symbols: All source symbols; segment ``l`` owns ``symbols[l * seed_len : (l + 1) * seed_len]``.
        seed_len: ``L_seed``.
        seed: Seed the pool was drawn from, or None when supplied explicitly.
    """

    symbols: FieldVector
    seed_len: int
    seed: int | None = None

    def segment(self, l_x: int) -> FieldVector:
        """Source symbols of segment ``l_x`` (0-based)."""
        return self.symbols.slice(l_x * self.seed_len, (l_x + 1) * self.seed_len)


@dataclass(frozen=True, slots=True)
class KeySchedule:
    """Generator plus the expanded per-client keys.

    Attributes:
        G_S: ``K x L_seed`` generator.
        keys: ``keys[k - 1]`` is ``S_k``, one symbol per segment.
        segments: ``L_X``.
    """

    G_S: FieldMatrix
    keys: tuple[FieldVector, ...]
    segments: int

    @property
    def seed_len(self) -> int:
        """``L_seed``."""
        return self.G_S.cols

    @property
    def source_len(self) -> int:
        """Total source symbols, ``L_X * L_seed``."""
        return self.segments * self.seed_len

    def key_of(self, client: int) -> FieldVector:
        """``S_k`` for a 1-based client id."""
        return self.keys[client - 1]

    def key_coefficients(self, client: int, l_x: int) -> FieldVector:
        """Coefficients of ``S_{k, l_x}`` over the whole source pool (G_S row ``k`` placed in segment ``l_x``)."""
        row = np.zeros(self.source_len, dtype=np.int64)
        start = l_x * self.seed_len
        row[start : start + self.seed_len] = self.G_S.row(client - 1).array
        return FieldVector(row, self.G_S.p)


# ==================================================================================================================== #
#                                                   CONSTRUCTION                                                       #
# ==================================================================================================================== #


def seed_length(K: int, d: int) -> int:  # noqa: N803
    """``L_seed = max(d, K - d)``."""
    return max(d, K - d)


def _candidate_gs(p: int, K: int, width: int, rng: np.random.Generator) -> FieldMatrix:  # noqa: N803
    points = rng.choice(np.arange(1, p, dtype=np.int64), size=K - 1, replace=False)
    rows = [[pow(int(a), j, p) for j in range(width)] for a in points]
    closing = [(-sum(col)) % p for col in zip(*rows, strict=True)]
    return FieldMatrix([*rows, closing], p)


def build_gs(cfg: FieldConfig, d: int, rng_seed: int) -> FieldMatrix:
    """Construct a verified ``K x max(d, K - d)`` key generator.

    Rows ``1..K-1`` are Vandermonde rows over distinct nonzero points; row ``K`` closes the column sums to zero.
    Points are redrawn until :func:`verify_gs` accepts.

    Raises:
        InvalidParamsError: If ``d`` is outside ``1..K-1``.
        ConstructionFailedError: If no candidate passes within the attempt budget.
    """
    if not 1 <= d <= cfg.K - 1:
        raise InvalidParamsError(f"build_gs needs 1 <= d <= K-1 = {cfg.K - 1}, got {d}")
    width = seed_length(cfg.K, d)
    for attempt in range(GS_MAX_ATTEMPTS):
        rng = np.random.default_rng([rng_seed, attempt])
        candidate = _candidate_gs(cfg.p, cfg.K, width, rng)
        if verify_gs(candidate, d):
            log.debug("G_S accepted on attempt %d (K=%d d=%d p=%d)", attempt, cfg.K, d, cfg.p)
            return candidate
        log.debug("G_S attempt %d rejected", attempt)
    raise ConstructionFailedError("G_S", GS_MAX_ATTEMPTS, cfg.p)


def verify_gs(G: FieldMatrix, d: int) -> bool:  # noqa: N803
    """Check zero column sums and the rank of every ``d``-row and ``(K - d)``-row submatrix (exhaustive)."""
    K = G.rows  # noqa: N806
    if not 1 <= d <= K - 1:
        return False
    if int(np.count_nonzero(np.mod(G.array.sum(axis=0), G.p))) != 0:
        return False
    for size in {d, K - d}:
        for subset in combinations(range(K), size):
            if mat_rank(G.select_rows(subset)) != size:
                return False
    return True


# ==================================================================================================================== #
#                                                     EXPANSION                                                        #
# ==================================================================================================================== #


def draw_source_randomness(p: int, seed_len: int, segments: int, seed: int) -> SourceRandomness:
    """Draw ``segments * seed_len`` uniform symbols of Z_p from ``default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    symbols = rng.integers(0, p, size=segments * seed_len, dtype=np.int64)
    return SourceRandomness(symbols=FieldVector(symbols, p), seed_len=seed_len, seed=seed)


def expand_keys(G: FieldMatrix, src: SourceRandomness, L_X: int) -> KeySchedule:  # noqa: N803
    """Per segment, ``(S_{1,l}, ..., S_{K,l}) = G_S @ Z_l``.

    Raises:
        LengthMismatchError: If ``src`` does not hold ``L_X * cols(G)`` symbols.
    """
    expected = L_X * G.cols
    if len(src.symbols) != expected:
        raise LengthMismatchError(expected, len(src.symbols))
    z = src.symbols.array.reshape(L_X, G.cols)
    per_segment = np.mod(G.array @ z.T, G.p)  # K x L_X
    keys = tuple(FieldVector(per_segment[k], G.p) for k in range(G.rows))
    return KeySchedule(G_S=G, keys=keys, segments=L_X)
