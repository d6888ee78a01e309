# src/resilient_hsa/gc_code.py
"""Straggler-tolerant linear code between relays and the server.

Each model segment has ``L~ = d - s`` coordinates. Relay ``m`` forwards, per segment, the plain sum of what its
clients sent, and client ``k`` sends relay ``m`` the inner product ``w_{m,k} . segment`` (plus its key at the
mask coordinate). For any set ``f`` of at most ``s`` missing relays, the server applies the combination matrix
``C_f`` (zero columns on ``f``) to the surviving relay symbols and reads off the all-clients sum of every
coordinate.

Construction (polynomial evaluation):

    - pick K distinct nonzero points a_1..a_K;
    - n_k(x) = prod over relays m outside R_k of (x - a_m), degree K - d;
    - p_{k,l} = n_k * q_{k,l} with deg q_{k,l} < L~, chosen so the coefficients of p_{k,l} at degrees
      K-d .. K-s-1 form the unit vector e_l;
    - w_{m,k}[l] = p_{k,l}(a_m).

A relay's symbol is then an evaluation of one polynomial of degree < K - s whose top ``L~`` coefficients are the
wanted sums, so any ``K - s`` relays suffice. ``C_f`` itself is obtained by exact elimination.
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from collections.abc import Iterable
from dataclasses import dataclass, field, replace
from itertools import combinations
import logging
from math import comb

# 3rd party
import numpy as np

# Local
from resilient_hsa.constants import CODE_MAX_ATTEMPTS
from resilient_hsa.errors import ConstructionFailedError, HsaError, InvalidParamsError
from resilient_hsa.ff_core import (
    FieldConfig,
    FieldMatrix,
    FieldVector,
    IntArray,
    NoSolutionError,
    mat_solve_left,
)
from resilient_hsa.topology import Topology

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)

type Pattern = tuple[int, ...]
type Link = tuple[int, int]


# ==================================================================================================================== #
#                                                   EXCEPTIONS                                                         #
# ==================================================================================================================== #
class TooManyMissingError(HsaError, ValueError):
    """Raised when more relays are missing than the code tolerates."""

    def __init__(self, missing: Iterable[int], s: int) -> None:
        """Initialize with the missing relays and the straggler tolerance.

        Args:
            missing: Relay ids that did not report.
            s: Number of stragglers the code tolerates.
        """
        self.missing: tuple[int, ...] = tuple(sorted(missing))
        self.s: int = s
        super().__init__(f"{len(self.missing)} relays missing {list(self.missing)}, code tolerates s = {s}")


# ==================================================================================================================== #
#                                                       GC CODE                                                        #
# ==================================================================================================================== #


@dataclass(frozen=True, eq=False)
class GcCode:
    """Encoders and combination matrices of one ``(K, d - s, s)`` code.

    Attributes:
        topology: Association graph the encoders live on.
        s: Straggler tolerance.
        p: Field modulus.
        encoders: ``w_{m,k}`` keyed by ``(relay, client)`` for every ``client in U_relay``.
        combos: ``C_f`` keyed by the sorted straggler pattern ``f`` (``|f| = s``).
        mask_coord: ``mask_coord[k - 1]`` is the 0-based segment coordinate carrying client ``k``'s key.
        unmasked: ``(relay, client)`` transmissions whose key has been stripped (test hook, see :func:`strip_mask`).
        points: Evaluation points when built by :func:`construct_code`, None for injected codes.
    """

    topology: Topology
    s: int
    p: int
    encoders: dict[Link, FieldVector]
    combos: dict[Pattern, FieldMatrix]
    mask_coord: tuple[int, ...]
    unmasked: frozenset[Link] = frozenset()
    points: tuple[int, ...] | None = field(default=None)

    @property
    def K(self) -> int:  # noqa: N802
        """Node count."""
        return self.topology.K

    @property
    def d(self) -> int:
        """Association degree."""
        return self.topology.d

    @property
    def segment_len(self) -> int:
        """``L~ = d - s``, model entries per segment."""
        return self.d - self.s

    def encoder(self, relay: int, client: int) -> FieldVector:
        """``w_{relay, client}``."""
        return self.encoders[(relay, client)]

    def mask_coefficient(self, relay: int, client: int) -> int:
        """Coefficient on ``S_client`` in ``X_{relay, client}``; 0 for stripped transmissions."""
        if (relay, client) in self.unmasked:
            return 0
        return self.encoders[(relay, client)][self.mask_coord[client - 1]]


# ==================================================================================================================== #
#                                                  POLYNOMIAL HELPERS                                                  #
# ==================================================================================================================== #


def _poly_mul(a: IntArray, b: IntArray, p: int) -> IntArray:
    """Product of two ascending-order coefficient arrays mod p."""
    return np.mod(np.convolve(a, b), p)


def _poly_eval(coeffs: IntArray, x: int, p: int) -> int:
    acc = 0
    for c in reversed(coeffs.tolist()):
        acc = (acc * x + int(c)) % p
    return acc


def _vanishing_poly(roots: Iterable[int], p: int) -> IntArray:
    """Monic ``prod (x - r)`` in ascending order."""
    poly = np.array([1], dtype=np.int64)
    for r in roots:
        poly = _poly_mul(poly, np.array([(-r) % p, 1], dtype=np.int64), p)
    return poly


def _client_polynomials(points: tuple[int, ...], topo: Topology, client: int, width: int, p: int) -> list[IntArray]:
    """``p_{k,l}`` for ``l = 0..width-1``: multiples of ``n_k`` whose top ``width`` coefficients are ``e_l``."""
    K, d = topo.K, topo.d  # noqa: N806
    silent = [points[m - 1] for m in topo.nodes if m not in topo.relays_of(client)]
    n_k = _vanishing_poly(silent, p)
    base = K - d
    shifted: list[IntArray] = []
    for t in range(width):
        poly = np.zeros(base + t + 1, dtype=np.int64)
        poly[t:] = n_k
        shifted.append(poly)
    top = FieldMatrix(
        [[int(poly[base + j]) if base + j < len(poly) else 0 for j in range(width)] for poly in shifted], p
    )
    quotients = mat_solve_left(top, FieldMatrix.identity(width, p))
    result: list[IntArray] = []
    for l in range(width):  # noqa: E741
        acc = np.zeros(base + width, dtype=np.int64)
        for t in range(width):
            acc[: len(shifted[t])] += quotients.get(l, t) * shifted[t]
        result.append(np.mod(acc, p))
    return result


# ==================================================================================================================== #
#                                                     CONSTRUCTION                                                     #
# ==================================================================================================================== #


def straggler_patterns(K: int, s: int) -> list[Pattern]:  # noqa: N803
    """All size-``s`` relay subsets in lexicographic order."""
    return list(combinations(range(1, K + 1), s))


def relay_coefficient_matrix(code: GcCode) -> FieldMatrix:
    """``K x (K * L~)`` map from model coordinates to relay symbols (row ``m``, column ``(k - 1) * L~ + l``)."""
    width = code.segment_len
    a = np.zeros((code.K, code.K * width), dtype=np.int64)
    for (m, k), w in code.encoders.items():
        a[m - 1, (k - 1) * width : k * width] = w.array
    return FieldMatrix(a, code.p)


def sum_target_block(K: int, width: int, p: int) -> FieldMatrix:  # noqa: N803
    """``L~ x (K * L~)`` rows selecting the all-clients sum of each coordinate."""
    return FieldMatrix(np.tile(np.eye(width, dtype=np.int64), (1, K)), p)


def solve_combination(code: GcCode, pattern: Pattern) -> FieldMatrix:
    """Solve for ``C_f`` given the encoders; raises NoSolutionError when the survivors cannot decode."""
    survivors = [m for m in code.topology.nodes if m not in pattern]
    a = relay_coefficient_matrix(code).select_rows([m - 1 for m in survivors])
    partial = mat_solve_left(a, sum_target_block(code.K, code.segment_len, code.p))
    full = np.zeros((code.segment_len, code.K), dtype=np.int64)
    for j, m in enumerate(survivors):
        full[:, m - 1] = partial.array[:, j]
    return FieldMatrix(full, code.p)


def _encoders_from_points(points: tuple[int, ...], topo: Topology, width: int, p: int) -> dict[Link, FieldVector]:
    encoders: dict[Link, FieldVector] = {}
    for k in topo.nodes:
        polys = _client_polynomials(points, topo, k, width, p)
        for m in topo.relays_of(k):
            encoders[(m, k)] = FieldVector([_poly_eval(poly, points[m - 1], p) for poly in polys], p)
    return encoders


def construct_code(cfg: FieldConfig, topo: Topology, s: int, rng_seed: int) -> GcCode:
    """Build a verified code for ``topo`` tolerating ``s`` stragglers.

    Evaluation points are redrawn until every mask coefficient is nonzero and every straggler pattern decodes.

    Raises:
        InvalidParamsError: Unless ``0 <= s < d <= K - 1`` and ``topo`` matches ``cfg``.
        ConstructionFailedError: If the attempt budget runs out.
    """
    if topo.K != cfg.K:
        raise InvalidParamsError(f"topology has K = {topo.K}, field config has K = {cfg.K}")
    if not 0 <= s < topo.d <= topo.K - 1:
        raise InvalidParamsError(f"need 0 <= s < d <= K-1, got s={s} d={topo.d} K={topo.K}")
    width = topo.d - s
    patterns = straggler_patterns(topo.K, s)
    for attempt in range(CODE_MAX_ATTEMPTS):
        rng = np.random.default_rng([rng_seed, attempt])
        points = tuple(int(x) for x in rng.choice(np.arange(1, cfg.p, dtype=np.int64), size=topo.K, replace=False))
        draft = GcCode(
            topology=topo,
            s=s,
            p=cfg.p,
            encoders=_encoders_from_points(points, topo, width, cfg.p),
            combos={},
            mask_coord=(0,) * topo.K,
            points=points,
        )
        if not verify_masking(draft):
            log.debug("code attempt %d: a mask coefficient vanished", attempt)
            continue
        try:
            combos = {f: solve_combination(draft, f) for f in patterns}
        except NoSolutionError:
            log.debug("code attempt %d: some straggler pattern does not decode", attempt)
            continue
        code = replace(draft, combos=combos)
        if verify_recovery(code):
            log.debug("code accepted on attempt %d (K=%d d=%d s=%d p=%d)", attempt, topo.K, topo.d, s, cfg.p)
            return code
    raise ConstructionFailedError("GcCode", CODE_MAX_ATTEMPTS, cfg.p)


# ==================================================================================================================== #
#                                                   VERIFICATION                                                       #
# ==================================================================================================================== #


def verify_masking(code: GcCode) -> bool:
    """True iff every transmitted symbol carries its client's key (nonzero mask coefficient)."""
    return all(code.mask_coefficient(m, k) != 0 for (m, k) in code.encoders)


def verify_recovery(code: GcCode) -> bool:
    """True iff every size-``s`` pattern has a stored ``C_f`` that is zero on ``f`` and recovers every coordinate sum."""
    if len(code.combos) != comb(code.K, code.s):
        return False
    return all(pattern_recovers(code, f) for f in straggler_patterns(code.K, code.s))


def pattern_recovers(code: GcCode, pattern: Pattern) -> bool:
    """True iff ``C_pattern`` is stored, vanishes on ``pattern`` and maps relay symbols to every coordinate sum."""
    c = code.combos.get(pattern)
    if c is None or c.shape != (code.segment_len, code.K):
        return False
    if any(not c.column(m - 1).is_zero() for m in pattern):
        return False
    return c @ relay_coefficient_matrix(code) == sum_target_block(code.K, code.segment_len, code.p)


# ==================================================================================================================== #
#                                                 SERVER-SIDE LOOKUP                                                   #
# ==================================================================================================================== #


def select_pattern(code: GcCode, missing: Iterable[int]) -> Pattern:
    """Lexicographically smallest stored pattern containing ``missing``.

    Raises:
        TooManyMissingError: If more than ``s`` relays are missing.
    """
    missing_set = frozenset(missing)
    if len(missing_set) > code.s:
        raise TooManyMissingError(missing_set, code.s)
    for f in sorted(code.combos):
        if missing_set.issubset(f):
            return f
    raise TooManyMissingError(missing_set, code.s)


def combination_matrix(code: GcCode, missing: Iterable[int]) -> FieldMatrix:
    """``C_f`` for the pattern chosen by :func:`select_pattern`."""
    return code.combos[select_pattern(code, missing)]


def strip_mask(code: GcCode, links: Iterable[Link]) -> GcCode:
    """Copy of ``code`` in which the given ``(relay, client)`` transmissions carry no key."""
    stripped = frozenset(links)
    unknown = stripped - code.encoders.keys()
    if unknown:
        raise InvalidParamsError(f"cannot strip keys from non-existent links {sorted(unknown)}")
    return replace(code, unmasked=code.unmasked | stripped)
