# src/resilient_hsa/ff_core.py
"""Exact arithmetic and dense linear algebra over the prime field Z_p.

Every other module builds on the three carriers defined here:

- :class:`FieldConfig` pins the modulus ``p``, the model alphabet size ``q`` and the node count ``K``.
- :class:`FieldVector` and :class:`FieldMatrix` wrap read-only ``int64`` numpy arrays whose entries are always
  reduced into ``{0, ..., p-1}``.

Elimination is plain Gauss-Jordan with the first nonzero pivot in column order, so rank, solutions and nullspace
bases are deterministic functions of their inputs.
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
import logging
from math import isqrt
from typing import overload

# 3rd party
import numpy as np
import numpy.typing as npt

# Local
from resilient_hsa.constants import MAX_MODULUS
from resilient_hsa.errors import HsaError, InvalidParamsError

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)

type IntArray = npt.NDArray[np.int64]


# ==================================================================================================================== #
#                                                   EXCEPTIONS                                                         #
# ==================================================================================================================== #
class NoSolutionError(HsaError):
    """Raised by :func:`mat_solve_left` when the target rows fall outside the row space of ``A``."""

    def __init__(self, a_shape: tuple[int, int], b_shape: tuple[int, int]) -> None:
        """Initialize with the shapes of the inconsistent system.

        Args:
            a_shape: Shape of the coefficient matrix ``A``.
            b_shape: Shape of the target matrix ``B``.
        """
        super().__init__(f"C @ A = B has no solution for A{a_shape}, B{b_shape}")
        self.a_shape: tuple[int, int] = a_shape
        self.b_shape: tuple[int, int] = b_shape


# ==================================================================================================================== #
#                                                       PRIMES                                                         #
# ==================================================================================================================== #


def is_prime(n: int) -> bool:
    """Deterministic trial-division primality test (desk-scale inputs)."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    return all(n % f for f in range(3, isqrt(n) + 1, 2))


def next_prime_above(bound: int) -> int:
    """Return the smallest prime strictly greater than ``bound``.

    Raises:
        InvalidParamsError: If ``bound < 1``.
    """
    if bound < 1:
        raise InvalidParamsError(f"next_prime_above needs bound >= 1, got {bound}")
    candidate = bound + 1
    while not is_prime(candidate):
        candidate += 1
    return candidate


def inverse(a: int, p: int) -> int:
    """Multiplicative inverse of ``a`` modulo ``p``; raises ZeroDivisionError for ``a = 0``."""
    a %= p
    if a == 0:
        raise ZeroDivisionError(f"0 has no inverse in Z_{p}")
    return pow(a, -1, p)


# ==================================================================================================================== #
#                                                    FIELD CONFIG                                                      #
# ==================================================================================================================== #


@dataclass(frozen=True, slots=True)
class FieldConfig:
    """Modulus and alphabet of one aggregation instance.

    Attributes:
        p: Prime modulus; must exceed ``K * (q - 1)`` so the field sum lifts uniquely to the integer sum.
        q: Alphabet size of every local-model entry (entries live in ``{0, ..., q-1}``).
        K: Number of clients (and of relays).
    """

    p: int
    q: int
    K: int

    def __post_init__(self) -> None:
        """Validate the field parameters.

        Raises:
            InvalidParamsError: If any invariant of the configuration is violated.
        """
        if self.K < 2:
            raise InvalidParamsError(f"K must be >= 2, got {self.K}")
        if self.q < 2:
            raise InvalidParamsError(f"q must be >= 2, got {self.q}")
        if not is_prime(self.p):
            raise InvalidParamsError(f"p = {self.p} is not prime")
        if self.p >= MAX_MODULUS:
            raise InvalidParamsError(f"p = {self.p} exceeds the desk-scale limit {MAX_MODULUS}")
        if self.p <= self.max_sum:
            raise InvalidParamsError(f"p = {self.p} must exceed K(q-1) = {self.max_sum}")

    @property
    def max_sum(self) -> int:
        """Largest possible integer sum of K model entries, ``K * (q - 1)``."""
        return self.K * (self.q - 1)

    @classmethod
    def with_default_prime(cls, q: int, K: int) -> FieldConfig:
        """Build a config whose modulus is the smallest prime above ``K * (q - 1)``."""
        return cls(p=next_prime_above(K * (q - 1)), q=q, K=K)


# ==================================================================================================================== #
#                                                   ARRAY HELPERS                                                      #
# ==================================================================================================================== #


def _as_residues(values: Iterable[int] | IntArray, p: int) -> IntArray:
    if isinstance(values, np.ndarray):
        arr = np.mod(values.astype(np.int64, copy=True), p)
    else:
        arr = np.array([int(v) % p for v in values], dtype=np.int64)
    return arr


def _freeze(arr: IntArray) -> IntArray:
    arr.flags.writeable = False
    return arr


def _row_reduce(a: IntArray, p: int) -> tuple[IntArray, list[int]]:
    """Return the reduced row echelon form of ``a`` over Z_p and its pivot columns.

    Pivot choice: first row (from the current one down) with a nonzero entry in the current column.
    """
    m: IntArray = np.mod(a.astype(np.int64, copy=True), p)
    n_rows, n_cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        nonzero = np.flatnonzero(m[r:, c])
        if nonzero.size == 0:
            continue
        pivot_row = r + int(nonzero[0])
        if pivot_row != r:
            m[[r, pivot_row]] = m[[pivot_row, r]]
        m[r] = np.mod(m[r] * inverse(int(m[r, c]), p), p)
        factors = m[:, c].copy()
        factors[r] = 0
        m = np.mod(m - np.outer(factors, m[r]), p)
        pivots.append(c)
        r += 1
    return m, pivots


# ==================================================================================================================== #
#                                                    FIELD VECTOR                                                      #
# ==================================================================================================================== #


class FieldVector:
    """Immutable vector over Z_p."""

    __slots__ = ("_entries", "p")

    def __init__(self, entries: Iterable[int] | IntArray, p: int) -> None:
        """Store ``entries`` reduced modulo ``p``.

        Args:
            entries: Integer values (any representatives); reduced eagerly.
            p: Field modulus.
        """
        self.p: int = p
        self._entries: IntArray = _freeze(_as_residues(entries, p).reshape(-1))

    # --------------------------------------------- constructors --------------------------------------------- #
    @classmethod
    def zeros(cls, n: int, p: int) -> FieldVector:
        """All-zero vector of length ``n``."""
        return cls(np.zeros(n, dtype=np.int64), p)

    @classmethod
    def concat(cls, parts: Sequence[FieldVector], p: int) -> FieldVector:
        """Concatenate vectors (an empty sequence gives the empty vector)."""
        if not parts:
            return cls.zeros(0, p)
        return cls(np.concatenate([v.array for v in parts]), p)

    # ----------------------------------------------- access ------------------------------------------------- #
    @property
    def array(self) -> IntArray:
        """Read-only numpy view of the residues."""
        return self._entries

    def tolist(self) -> list[int]:
        """Residues as plain Python ints."""
        return [int(x) for x in self._entries]

    def __len__(self) -> int:
        return int(self._entries.shape[0])

    def __iter__(self) -> Iterator[int]:
        return iter(self.tolist())

    def __getitem__(self, index: int) -> int:
        return int(self._entries[index])

    def slice(self, start: int, stop: int) -> FieldVector:
        """Entries ``start`` (inclusive) to ``stop`` (exclusive)."""
        return FieldVector(self._entries[start:stop], self.p)

    # --------------------------------------------- arithmetic ----------------------------------------------- #
    def _check(self, other: FieldVector) -> None:
        if other.p != self.p or len(other) != len(self):
            raise InvalidParamsError(f"vector mismatch: len {len(self)} mod {self.p} vs len {len(other)} mod {other.p}")

    def __add__(self, other: FieldVector) -> FieldVector:
        self._check(other)
        return FieldVector(self._entries + other.array, self.p)

    def __sub__(self, other: FieldVector) -> FieldVector:
        self._check(other)
        return FieldVector(self._entries - other.array, self.p)

    def __neg__(self) -> FieldVector:
        return FieldVector(-self._entries, self.p)

    def scale(self, c: int) -> FieldVector:
        """Multiply every entry by the scalar ``c``."""
        return FieldVector(self._entries * (int(c) % self.p), self.p)

    def dot(self, other: FieldVector) -> int:
        """Inner product over Z_p."""
        self._check(other)
        return int(np.mod(self._entries * other.array, self.p).sum() % self.p)

    def is_zero(self) -> bool:
        """True iff every entry is 0."""
        return not bool(self._entries.any())

    def as_row(self) -> FieldMatrix:
        """The vector as a ``1 x n`` matrix."""
        return FieldMatrix(self._entries.reshape(1, -1), self.p)

    # ---------------------------------------------- protocol ------------------------------------------------ #
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FieldVector):
            return NotImplemented
        return self.p == other.p and np.array_equal(self._entries, other.array)

    def __hash__(self) -> int:
        return hash((self.p, self._entries.tobytes()))

    def __repr__(self) -> str:
        return f"FieldVector({self.tolist()}, p={self.p})"


# ==================================================================================================================== #
#                                                    FIELD MATRIX                                                      #
# ==================================================================================================================== #


class FieldMatrix:
    """Immutable dense matrix over Z_p, row-major."""

    __slots__ = ("_entries", "p")

    def __init__(self, entries: IntArray | Sequence[Sequence[int]], p: int, cols: int | None = None) -> None:
        """Store ``entries`` reduced modulo ``p``.

        Args:
            entries: 2-D numpy array or nested sequence of rows.
            p: Field modulus.
            cols: Column count, required only to build a matrix with zero rows from a nested sequence.
        """
        self.p: int = p
        if isinstance(entries, np.ndarray):
            arr = np.mod(entries.astype(np.int64, copy=True), p)
        elif len(entries) == 0:
            arr = np.zeros((0, cols or 0), dtype=np.int64)
        else:
            arr = np.array([[int(x) % p for x in row] for row in entries], dtype=np.int64)
        if arr.ndim != 2:
            raise InvalidParamsError(f"FieldMatrix needs 2-D entries, got shape {arr.shape}")
        self._entries: IntArray = _freeze(arr)

    # --------------------------------------------- constructors --------------------------------------------- #
    @classmethod
    def zeros(cls, rows: int, cols: int, p: int) -> FieldMatrix:
        """All-zero ``rows x cols`` matrix."""
        return cls(np.zeros((rows, cols), dtype=np.int64), p)

    @classmethod
    def identity(cls, n: int, p: int) -> FieldMatrix:
        """``n x n`` identity."""
        return cls(np.eye(n, dtype=np.int64), p)

    @classmethod
    def from_vectors(cls, rows: Sequence[FieldVector], p: int, cols: int = 0) -> FieldMatrix:
        """Stack vectors as rows; ``cols`` fixes the width when ``rows`` is empty."""
        if not rows:
            return cls.zeros(0, cols, p)
        return cls(np.vstack([v.array for v in rows]), p)

    @classmethod
    def vstack(cls, blocks: Sequence[FieldMatrix], p: int, cols: int = 0) -> FieldMatrix:
        """Stack matrices vertically; ``cols`` fixes the width when ``blocks`` is empty."""
        if not blocks:
            return cls.zeros(0, cols, p)
        return cls(np.vstack([b.array for b in blocks]), p)

    @classmethod
    def hstack(cls, blocks: Sequence[FieldMatrix], p: int) -> FieldMatrix:
        """Concatenate matrices side by side (equal row counts)."""
        return cls(np.hstack([b.array for b in blocks]), p)

    # ----------------------------------------------- access ------------------------------------------------- #
    @property
    def array(self) -> IntArray:
        """Read-only numpy view of the residues."""
        return self._entries

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, cols)."""
        r, c = self._entries.shape
        return int(r), int(c)

    @property
    def rows(self) -> int:
        """Row count."""
        return self.shape[0]

    @property
    def cols(self) -> int:
        """Column count."""
        return self.shape[1]

    @property
    def T(self) -> FieldMatrix:  # noqa: N802
        """Transpose."""
        return FieldMatrix(self._entries.T, self.p)

    def row(self, i: int) -> FieldVector:
        """Row ``i`` as a vector."""
        return FieldVector(self._entries[i], self.p)

    def column(self, j: int) -> FieldVector:
        """Column ``j`` as a vector."""
        return FieldVector(self._entries[:, j], self.p)

    def select_rows(self, indices: Sequence[int]) -> FieldMatrix:
        """Submatrix made of the given rows, in the given order."""
        return FieldMatrix(self._entries[list(indices), :].reshape(len(indices), self.cols), self.p)

    def tolist(self) -> list[list[int]]:
        """Rows of plain Python ints."""
        return [[int(x) for x in row] for row in self._entries]

    def get(self, i: int, j: int) -> int:
        """Entry ``(i, j)``."""
        return int(self._entries[i, j])

    # --------------------------------------------- arithmetic ----------------------------------------------- #
    def __add__(self, other: FieldMatrix) -> FieldMatrix:
        if other.shape != self.shape or other.p != self.p:
            raise InvalidParamsError(f"cannot add {self.shape} and {other.shape}")
        return FieldMatrix(self._entries + other.array, self.p)

    def __sub__(self, other: FieldMatrix) -> FieldMatrix:
        if other.shape != self.shape or other.p != self.p:
            raise InvalidParamsError(f"cannot subtract {other.shape} from {self.shape}")
        return FieldMatrix(self._entries - other.array, self.p)

    def scale(self, c: int) -> FieldMatrix:
        """Multiply every entry by the scalar ``c``."""
        return FieldMatrix(self._entries * (int(c) % self.p), self.p)

    @overload
    def __matmul__(self, other: FieldMatrix) -> FieldMatrix: ...
    @overload
    def __matmul__(self, other: FieldVector) -> FieldVector: ...
    def __matmul__(self, other: FieldMatrix | FieldVector) -> FieldMatrix | FieldVector:
        if other.p != self.p:
            raise InvalidParamsError(f"modulus mismatch {self.p} vs {other.p}")
        if isinstance(other, FieldVector):
            if len(other) != self.cols:
                raise InvalidParamsError(f"cannot apply {self.shape} to a vector of length {len(other)}")
            return FieldVector(np.mod(self._entries @ other.array, self.p), self.p)
        if other.rows != self.cols:
            raise InvalidParamsError(f"cannot multiply {self.shape} by {other.shape}")
        return FieldMatrix(np.mod(self._entries @ other.array, self.p), self.p)

    def is_zero(self) -> bool:
        """True iff every entry is 0."""
        return not bool(self._entries.any())

    # ---------------------------------------------- protocol ------------------------------------------------ #
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.p == other.p and self.shape == other.shape and np.array_equal(self._entries, other.array)

    def __hash__(self) -> int:
        return hash((self.p, self.shape, self._entries.tobytes()))

    def __repr__(self) -> str:
        return f"FieldMatrix({self.tolist()}, p={self.p})"


# ==================================================================================================================== #
#                                                   LINEAR ALGEBRA                                                     #
# ==================================================================================================================== #


def mat_rank(m: FieldMatrix) -> int:
    """Rank of ``m`` over Z_p."""
    _, pivots = _row_reduce(m.array, m.p)
    return len(pivots)


def mat_solve_left(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    """Return ``C`` with ``C @ a == b`` over Z_p.

    Free variables are fixed to zero, so the answer is a deterministic function of ``(a, b)``.

    Raises:
        InvalidParamsError: If ``a`` and ``b`` have different column counts.
        NoSolutionError: If some row of ``b`` lies outside the row space of ``a``.
    """
    if a.cols != b.cols:
        raise InvalidParamsError(f"mat_solve_left needs equal column counts, got {a.shape} and {b.shape}")
    p = a.p
    # C @ A = B  <=>  A^T @ C^T = B^T; reduce the augmented system [A^T | B^T].
    augmented = np.hstack([a.array.T, b.array.T])
    reduced, pivots = _row_reduce(augmented, p)
    if any(c >= a.rows for c in pivots):
        raise NoSolutionError(a.shape, b.shape)
    c_transposed = np.zeros((a.rows, b.rows), dtype=np.int64)
    for i, col in enumerate(pivots):
        c_transposed[col] = reduced[i, a.rows :]
    return FieldMatrix(c_transposed.T, p)


def nullspace_basis(m: FieldMatrix) -> FieldMatrix:
    """Basis (as rows) of the left nullspace ``{v : v @ m = 0}``.

    The basis is read off the reduced echelon form of ``m^T``: one row per free column, with a 1 in that column.
    """
    p = m.p
    reduced, pivots = _row_reduce(m.array.T, p)
    pivot_set = set(pivots)
    basis: list[IntArray] = []
    for free in (j for j in range(m.rows) if j not in pivot_set):
        v = np.zeros(m.rows, dtype=np.int64)
        v[free] = 1
        for i, col in enumerate(pivots):
            v[col] = (-int(reduced[i, free])) % p
        basis.append(v)
    if not basis:
        return FieldMatrix.zeros(0, m.rows, p)
    return FieldMatrix(np.vstack(basis), p)


def rowspace_contains(space: FieldMatrix, rows: FieldMatrix) -> bool:
    """True iff every row of ``rows`` lies in the row space of ``space``."""
    if rows.rows == 0:
        return True
    stacked = FieldMatrix.vstack([space, rows], space.p)
    return mat_rank(stacked) == mat_rank(space)
