# src/resilient_hsa/security_audit.py
"""Exact security audits of linear observations.

An observation is what one party sees, written as ``M_theta @ Theta + M_z @ Z`` with uniform independent ``Z``.

- Relay leakage counts the model directions a relay can isolate after cancelling all randomness:
  ``rank([M_theta | M_z]) - rank(M_z)``.
- Server leakage does the same for the server but forgives anything in the span of the all-clients sum.
- :func:`brute_force_mi` cross-checks both on tiny instances by enumerating every assignment and computing the
  mutual information from exact counts. The result is kept as ``sum_r r * log(r_prime)`` with rational weights,
  so "is it zero?" never depends on a float tolerance.
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
import logging
import math

# 3rd party
import numpy as np

# Local
from resilient_hsa.constants import BRUTE_FORCE_LIMIT
from resilient_hsa.errors import HsaError, InvalidParamsError
from resilient_hsa.ff_core import FieldConfig, FieldMatrix, mat_rank, nullspace_basis
from resilient_hsa.protocol import ClientMessage, RelayMessage

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)


# ==================================================================================================================== #
#                                                   EXCEPTIONS                                                         #
# ==================================================================================================================== #
class TooLargeError(HsaError):
    """Raised when a brute-force enumeration would exceed the configured limit."""

    def __init__(self, size: int, limit: int) -> None:
        """Initialize with the enumeration size and the limit.

        Args:
            size: Number of joint assignments the enumeration would visit.
            limit: Largest admissible size.
        """
        super().__init__(f"brute-force enumeration of {size} assignments exceeds the limit {limit}")
        self.size: int = size
        self.limit: int = limit


# ==================================================================================================================== #
#                                                     OBSERVATIONS                                                     #
# ==================================================================================================================== #


@dataclass(frozen=True, slots=True)
class LinearObservation:
    """Rows observed by one party, split into model and randomness coefficients."""

    m_theta: FieldMatrix
    m_z: FieldMatrix
    label: str

    @property
    def rows(self) -> int:
        """Observed symbol count."""
        return self.m_theta.rows


def relay_observation(messages: Sequence[ClientMessage], label: str) -> LinearObservation:
    """Stack the traces of everything a relay received."""
    if not messages:
        raise InvalidParamsError("relay_observation needs at least one message")
    p = messages[0].payload.p
    return LinearObservation(
        m_theta=FieldMatrix.vstack([msg.trace.theta for msg in messages], p),
        m_z=FieldMatrix.vstack([msg.trace.z for msg in messages], p),
        label=label,
    )


def server_observation(
    messages: Iterable[RelayMessage], theta_cols: int, z_cols: int, p: int, label: str
) -> LinearObservation:
    """Stack the traces of the relay messages that reached the server (possibly none)."""
    ordered = sorted(messages, key=lambda msg: msg.relay)
    return LinearObservation(
        m_theta=FieldMatrix.vstack([msg.trace.theta for msg in ordered], p, cols=theta_cols),
        m_z=FieldMatrix.vstack([msg.trace.z for msg in ordered], p, cols=z_cols),
        label=label,
    )


def sum_target_matrix(K: int, padded_len: int, p: int) -> FieldMatrix:  # noqa: N803
    """One row per model position, with coefficient 1 on that position of every client."""
    return FieldMatrix(np.tile(np.eye(padded_len, dtype=np.int64), (1, K)), p)


# ==================================================================================================================== #
#                                                    RANK AUDITS                                                       #
# ==================================================================================================================== #


@dataclass(frozen=True, slots=True)
class ServerAudit:
    """Server-side accounting.

    Attributes:
        leaked_dof: Model directions revealed beyond the all-clients sum.
        key_cancelling_dof: Dimension of the combinations that cancel every key symbol.
        sum_dof: Part of those combinations that reveals only the sum; equals ``key_cancelling_dof`` iff secure.
    """

    leaked_dof: int
    key_cancelling_dof: int
    sum_dof: int


def relay_leakage(obs: LinearObservation) -> int:
    """Model directions isolated by randomness-cancelling combinations of the observed rows."""
    joint = FieldMatrix.hstack([obs.m_theta, obs.m_z], obs.m_theta.p)
    return mat_rank(joint) - mat_rank(obs.m_z)


def server_audit(obs: LinearObservation, sum_targets: FieldMatrix) -> ServerAudit:
    """Rank accounting of what the server learns beyond ``sum_targets``."""
    cancelling = nullspace_basis(obs.m_z)
    if cancelling.rows == 0:
        return ServerAudit(leaked_dof=0, key_cancelling_dof=0, sum_dof=0)
    revealed = cancelling @ obs.m_theta
    p = sum_targets.p
    leaked = mat_rank(FieldMatrix.vstack([revealed, sum_targets], p)) - mat_rank(sum_targets)
    return ServerAudit(leaked_dof=leaked, key_cancelling_dof=cancelling.rows, sum_dof=cancelling.rows - leaked)


def server_leakage(obs: LinearObservation, sum_targets: FieldMatrix) -> int:
    """``leaked_dof`` of :func:`server_audit`."""
    return server_audit(obs, sum_targets).leaked_dof


# ==================================================================================================================== #
#                                                 BRUTE-FORCE ORACLE                                                   #
# ==================================================================================================================== #


def _factorize(n: int) -> Counter[int]:
    factors: Counter[int] = Counter()
    f = 2
    while f * f <= n:
        while n % f == 0:
            factors[f] += 1
            n //= f
        f += 1
    if n > 1:
        factors[n] += 1
    return factors


@dataclass(frozen=True)
class MutualInformation:
    """Exact ``sum over primes r of weight_r * log(r)``; weights are rationals.

    Logarithms of distinct primes are linearly independent over the rationals, so the value is zero exactly when
    every weight is zero.
    """

    weights: dict[int, Fraction] = field(default_factory=dict)

    @classmethod
    def of_log(cls, n: int, scale: Fraction = Fraction(1)) -> MutualInformation:
        """``scale * log(n)``."""
        return cls({prime: scale * e for prime, e in _factorize(n).items()})._normalized()

    def _normalized(self) -> MutualInformation:
        return MutualInformation({prime: w for prime, w in sorted(self.weights.items()) if w != 0})

    def __add__(self, other: MutualInformation) -> MutualInformation:
        merged = dict(self.weights)
        for prime, w in other.weights.items():
            merged[prime] = merged.get(prime, Fraction(0)) + w
        return MutualInformation(merged)._normalized()

    def __neg__(self) -> MutualInformation:
        return MutualInformation({prime: -w for prime, w in self.weights.items()})

    def __sub__(self, other: MutualInformation) -> MutualInformation:
        return self + (-other)

    def is_zero(self) -> bool:
        """Exact zero test."""
        return not self.weights

    def bits(self) -> float:
        """Value in bits (display only)."""
        return sum(float(w) * math.log2(prime) for prime, w in self.weights.items())

    def in_log_p(self, p: int) -> Fraction | None:
        """Exact value in ``log p`` units when only ``p`` appears, else None."""
        if self.is_zero():
            return Fraction(0)
        if set(self.weights) == {p}:
            return self.weights[p]
        return None

    def log_p_units(self, p: int) -> float:
        """Value divided by ``log p`` (display only)."""
        return sum(float(w) * math.log(prime) for prime, w in self.weights.items()) / math.log(p)


def _sum_c_log_c(counts: Iterable[int]) -> MutualInformation:
    total = MutualInformation()
    for c, mult in Counter(counts).items():
        if c > 1:
            total = total + MutualInformation.of_log(c, Fraction(c * mult))
    return total


def _entropy(counts: Mapping[bytes, int] | Iterable[int], n: int) -> MutualInformation:
    """Entropy of an empirical distribution with integer ``counts`` summing to ``n``."""
    values = counts.values() if isinstance(counts, Mapping) else counts
    return MutualInformation.of_log(n) - MutualInformation(
        {prime: w / n for prime, w in _sum_c_log_c(values).weights.items()}
    )


def brute_force_mi(
    obs: LinearObservation,
    cfg: FieldConfig,
    theta_alphabet: int,
    conditioning: FieldMatrix | None = None,
) -> MutualInformation:
    """``I(Theta; obs)`` (or ``I(Theta; obs | sum)``) by full enumeration.

    ``Theta`` is uniform over ``{0, ..., theta_alphabet - 1}`` per entry and ``Z`` is uniform over Z_p.

    Raises:
        TooLargeError: If the enumeration would exceed the brute-force limit.
    """
    p = cfg.p
    n_theta, n_z = obs.m_theta.cols, obs.m_z.cols
    size = theta_alphabet**n_theta * p**n_z
    if size > BRUTE_FORCE_LIMIT:
        raise TooLargeError(size, BRUTE_FORCE_LIMIT)
    if obs.rows == 0:
        return MutualInformation()

    z_grid = np.array(list(product(range(p), repeat=n_z)), dtype=np.int64).reshape(p**n_z, n_z)
    z_part = np.mod(z_grid @ obs.m_z.array.T, p)
    n_zs = z_grid.shape[0]

    joint: Counter[bytes] = Counter()
    sum_counts: Counter[bytes] = Counter()
    conditional = MutualInformation()
    n_thetas = 0
    for theta in product(range(theta_alphabet), repeat=n_theta):
        theta_arr = np.array(theta, dtype=np.int64)
        y = np.mod(z_part + obs.m_theta.array @ theta_arr, p)
        rows, counts = np.unique(y, axis=0, return_counts=True)
        conditional = conditional + _entropy([int(c) for c in counts], n_zs)
        tag = b"" if conditioning is None else np.mod(conditioning.array @ theta_arr, p).tobytes()
        sum_counts[tag] += n_zs
        for row, c in zip(rows, counts, strict=True):
            joint[tag + b"|" + row.tobytes()] += int(c)
        n_thetas += 1

    n_total = n_thetas * n_zs
    h_y_given_theta = MutualInformation(
        {prime: w / n_thetas for prime, w in conditional.weights.items()}
    )._normalized()
    h_joint = _entropy(joint, n_total)
    h_sum = _entropy(sum_counts, n_total)
    result = h_joint - h_sum - h_y_given_theta
    log.debug("brute-force MI for %s over %d assignments: %s", obs.label, size, result.weights)
    return result
