# src/resilient_hsa/errors.py
"""Exception families shared across modules.

The CLI maps each family onto an exit code; module-specific failures subclass one of them and live next to the
code that raises them.
"""

# ==================================================================================================================== #
#                                                   EXCEPTIONS                                                         #
# ==================================================================================================================== #
from __future__ import annotations


class HsaError(Exception):
    """Base class for every failure raised by resilient_hsa."""


class InvalidParamsError(HsaError, ValueError):
    """Raised when parameters violate a documented precondition."""


class ConstructionFailedError(HsaError, RuntimeError):
    """Raised when a randomized construction exhausts its retry budget.

    Usually the prime is too small for the requested (K, d, s); raising p is the remedy.
    """

    def __init__(self, what: str, attempts: int, p: int) -> None:
        """Initialize with the construction name, the budget spent and the modulus tried.

        Args:
            what: Name of the construction that failed (e.g. ``"G_S"``).
            attempts: Number of attempts made before giving up.
            p: Field modulus in use.
        """
        super().__init__(f"{what} construction failed after {attempts} attempts over Z_{p}; try a larger prime")
        self.what: str = what
        self.attempts: int = attempts
        self.p: int = p


class VerificationError(HsaError):
    """Raised when a golden check does not match; ``artifact`` names the first mismatch."""

    def __init__(self, artifact: str, detail: str) -> None:
        """Initialize with the failing artifact and a human-readable diagnostic.

        Args:
            artifact: Name of the mismatching object, e.g. ``"C_1"`` or ``"X_4,1"``.
            detail: What was expected versus what was found.
        """
        super().__init__(f"{artifact}: {detail}")
        self.artifact: str = artifact
        self.detail: str = detail
