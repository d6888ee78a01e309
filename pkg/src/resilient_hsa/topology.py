# src/resilient_hsa/topology.py
"""Cyclic client-to-relay association.

Client ``k`` sends to the ``d`` relays ending at ``k`` in cyclic order and relay ``m`` hears the ``d`` clients
starting at ``m``. All ids are 1-based:

    R_k = ( ((k - i) mod K) + 1  for i = 1..d )      e.g. K=5, d=3: R_1 = (1, 5, 4)
    U_m = ( ((m + i - 2) mod K) + 1  for i = 1..d )  e.g. K=5, d=3: U_1 = (1, 2, 3)
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from dataclasses import dataclass
import logging

# Local
from resilient_hsa.errors import InvalidParamsError

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)


# ==================================================================================================================== #
#                                                      TOPOLOGY                                                        #
# ==================================================================================================================== #


@dataclass(frozen=True, slots=True)
class Topology:
    """Association graph between ``K`` clients and ``K`` relays.

    Attributes:
        K: Node count on each side.
        d: Association degree.
        relay_sets: ``relay_sets[k - 1]`` is the ordered set ``R_k``.
        client_sets: ``client_sets[m - 1]`` is the ordered set ``U_m``.
    """

    K: int
    d: int
    relay_sets: tuple[tuple[int, ...], ...]
    client_sets: tuple[tuple[int, ...], ...]

    def relays_of(self, client: int) -> tuple[int, ...]:
        """``R_k`` for a 1-based client id."""
        return self.relay_sets[client - 1]

    def clients_of(self, relay: int) -> tuple[int, ...]:
        """``U_m`` for a 1-based relay id."""
        return self.client_sets[relay - 1]

    @property
    def nodes(self) -> range:
        """1-based ids ``1..K``."""
        return range(1, self.K + 1)

    def links(self) -> list[tuple[int, int]]:
        """Every client-to-relay link as ``(client, relay)``, sorted."""
        return sorted((k, m) for k in self.nodes for m in self.relays_of(k))


def build_topology(K: int, d: int) -> Topology:  # noqa: N803
    """Build the cyclic topology for ``K`` nodes and degree ``d``.

    Raises:
        InvalidParamsError: If ``K < 2`` or ``d`` is outside ``1..K``.
    """
    if K < 2:
        raise InvalidParamsError(f"K must be >= 2, got {K}")
    if not 1 <= d <= K:
        raise InvalidParamsError(f"d must satisfy 1 <= d <= K = {K}, got {d}")
    relay_sets = tuple(tuple(((k - i) % K) + 1 for i in range(1, d + 1)) for k in range(1, K + 1))
    client_sets = tuple(tuple(((m + i - 2) % K) + 1 for i in range(1, d + 1)) for m in range(1, K + 1))
    log.debug("Built cyclic topology K=%d d=%d", K, d)
    return Topology(K=K, d=d, relay_sets=relay_sets, client_sets=client_sets)


def check_duality(t: Topology) -> bool:
    """True iff ``m in R_k`` exactly when ``k in U_m``, for every pair."""
    if len(t.relay_sets) != t.K or len(t.client_sets) != t.K:
        return False
    return all(
        (m in t.relays_of(k)) == (k in t.clients_of(m)) for k in range(1, t.K + 1) for m in range(1, t.K + 1)
    )
