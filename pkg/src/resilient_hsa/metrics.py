# src/resilient_hsa/metrics.py
"""Communication and key rates, measured by symbol counting and compared with the optimal region.

Rates are exact :class:`~fractions.Fraction` values. Key rates carry the unit ``log p / log q`` symbolically and
are only ever compared with rates of the same unit.
"""

# ==================================================================================================================== #
#                                                        IMPORTS                                                       #
# ==================================================================================================================== #
from __future__ import annotations

# stdlib
from dataclasses import dataclass
from fractions import Fraction
import logging
import math
from typing import Literal

# Local
from resilient_hsa.errors import InvalidParamsError
from resilient_hsa.ff_core import FieldConfig
from resilient_hsa.gc_code import GcCode
from resilient_hsa.keygen import KeySchedule
from resilient_hsa.protocol import SegmentLayout
from resilient_hsa.topology import Topology

# ------------------------------------------------------ LOGGING ----------------------------------------------------- #
log: logging.Logger = logging.getLogger(__name__)

type Unit = Literal["1", "log p/log q"]
UNITLESS: Unit = "1"
KEY_UNIT: Unit = "log p/log q"
RATE_NAMES: tuple[str, ...] = ("R1", "R2", "RS", "RSsum")


# ==================================================================================================================== #
#                                                       RATES                                                          #
# ==================================================================================================================== #


@dataclass(frozen=True, slots=True)
class Rate:
    """Exact rational rate times a symbolic unit."""

    value: Fraction
    unit: Unit = UNITLESS

    def _same_unit(self, other: Rate) -> None:
        if self.unit != other.unit:
            raise InvalidParamsError(f"cannot compare a rate in '{self.unit}' with one in '{other.unit}'")

    def __ge__(self, other: Rate) -> bool:
        self._same_unit(other)
        return self.value >= other.value

    def __gt__(self, other: Rate) -> bool:
        self._same_unit(other)
        return self.value > other.value

    def as_float(self, p: int, q: int) -> float:
        """Numeric value with the unit expanded (display only)."""
        factor = 1.0 if self.unit == UNITLESS else math.log(p) / math.log(q)
        return float(self.value) * factor


@dataclass(frozen=True, slots=True)
class RateBounds:
    """One value per rate, in ``RATE_NAMES`` order."""

    R1: Rate
    R2: Rate
    RS: Rate
    RSsum: Rate

    def as_dict(self) -> dict[str, Rate]:
        """Rates keyed by name."""
        return {name: getattr(self, name) for name in RATE_NAMES}


@dataclass(frozen=True, slots=True)
class RateReport:
    """Measured rates next to the lower bounds of the optimal region.

    Attributes:
        measured: Symbol-count rates of the scheme.
        bounds: Lower bounds for the same ``(K, d, s)``.
        achieves_optimum: Per rate, measured equals bound exactly.
        client_symmetric: Every client uploads the same number of symbols.
    """

    measured: RateBounds
    bounds: RateBounds
    achieves_optimum: dict[str, bool]
    client_symmetric: bool


# ==================================================================================================================== #
#                                                      BOUNDS                                                          #
# ==================================================================================================================== #


def theorem1_bounds(K: int, d: int, s: int, cfg: FieldConfig) -> RateBounds:  # noqa: N803
    """Lower bounds of the optimal rate region.

    ``R1 >= d/(d-s)``, ``R2 >= max(1/(d-s), 1/(K-1))``, ``RS >= max(1/(d-s), 1/(K-1)) u`` and
    ``RSsum >= max(d, K-d)/(d-s) u`` with ``u = log p / log q``.

    Raises:
        InvalidParamsError: Unless ``0 <= s < d <= K - 1`` and ``K`` matches ``cfg``.
    """
    if K != cfg.K:
        raise InvalidParamsError(f"K = {K} does not match the field config (K = {cfg.K})")
    if not 0 <= s < d <= K - 1:
        raise InvalidParamsError(f"rate bounds need 0 <= s < d <= K-1, got K={K} d={d} s={s}")
    width = d - s
    relay_rate = max(Fraction(1, width), Fraction(1, K - 1))
    return RateBounds(
        R1=Rate(Fraction(d, width)),
        R2=Rate(relay_rate),
        RS=Rate(relay_rate, KEY_UNIT),
        RSsum=Rate(Fraction(max(d, K - d), width), KEY_UNIT),
    )


# ==================================================================================================================== #
#                                                    MEASUREMENT                                                       #
# ==================================================================================================================== #


def measured_rates(
    sched: KeySchedule, code: GcCode, cfg: FieldConfig, topo: Topology, model_length: int
) -> RateReport:
    """Count transmitted and key symbols per model entry.

    Every message and key symbol is uniform (established by the rank audits), so symbol counts equal entropies.
    """
    layout = SegmentLayout(model_length, code.segment_len)
    per_message = Fraction(layout.segments, model_length)
    uploads = {k: len(topo.relays_of(k)) * per_message for k in topo.nodes}
    symmetric = len(set(uploads.values())) == 1
    measured = RateBounds(
        R1=Rate(uploads[1]),
        R2=Rate(per_message),
        RS=Rate(Fraction(sched.segments, model_length), KEY_UNIT),
        RSsum=Rate(Fraction(sched.source_len, model_length), KEY_UNIT),
    )
    bounds = theorem1_bounds(topo.K, topo.d, code.s, cfg)
    optimum = {
        name: measured.as_dict()[name].value == bound.value for name, bound in bounds.as_dict().items()
    }
    log.debug("measured rates %s (optimal: %s)", measured, optimum)
    return RateReport(measured=measured, bounds=bounds, achieves_optimum=optimum, client_symmetric=symmetric)


def check_in_region(report: RateReport) -> dict[str, bool]:
    """Per rate, ``measured >= bound`` (exact comparison in matching units)."""
    measured = report.measured.as_dict()
    return {name: measured[name] >= bound for name, bound in report.bounds.as_dict().items()}
