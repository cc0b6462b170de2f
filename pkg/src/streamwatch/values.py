"""Scalar value types, timestamps, and duration arithmetic.

Timestamps and durations are integer nanoseconds throughout the engine;
seconds only appear at the I/O boundary.
"""

from __future__ import annotations

import enum
import math

NS_PER_SEC = 1_000_000_000
NS_PER_MS = 1_000_000
NS_PER_MIN = 60 * NS_PER_SEC

# Runtime representation: Bool -> bool, Int64/UInt64/UInt8 -> int,
# Float64 -> float.  Python ints are exact; range checks happen at casts
# and at the conversion boundary, not on every arithmetic op.
Value = bool | int | float


class ValueType(enum.Enum):
    INT64 = "Int64"
    UINT64 = "UInt64"
    UINT8 = "UInt8"
    FLOAT64 = "Float64"
    BOOL = "Bool"

    def __str__(self) -> str:
        return self.value


# Surface aliases accepted by the parser; canonical names always print.
TYPE_NAMES: dict[str, ValueType] = {
    "Int64": ValueType.INT64,
    "Int": ValueType.INT64,
    "UInt64": ValueType.UINT64,
    "UInt8": ValueType.UINT8,
    "Float64": ValueType.FLOAT64,
    "Float": ValueType.FLOAT64,
    "Bool": ValueType.BOOL,
}

INT_RANGES: dict[ValueType, tuple[int, int]] = {
    ValueType.INT64: (-(2**63), 2**63 - 1),
    ValueType.UINT64: (0, 2**64 - 1),
    ValueType.UINT8: (0, 255),
}

NUMERIC_TYPES = frozenset(
    {ValueType.INT64, ValueType.UINT64, ValueType.UINT8, ValueType.FLOAT64}
)
INTEGER_TYPES = frozenset({ValueType.INT64, ValueType.UINT64, ValueType.UINT8})


def value_matches_type(value: Value, ty: ValueType) -> bool:
    """Check a runtime value against a declared stream type."""
    if ty is ValueType.BOOL:
        return isinstance(value, bool)
    if isinstance(value, bool):  # bool is an int subclass; reject explicitly
        return False
    if ty is ValueType.FLOAT64:
        return isinstance(value, float)
    if not isinstance(value, int):
        return False
    lo, hi = INT_RANGES[ty]
    return lo <= value <= hi


def ns_from_seconds(seconds: float) -> int:
    """Convert decimal seconds to integer nanoseconds (round half-even).

    Every connector funnels record times through this one function so the
    same logical trace produces identical timestamps regardless of source.
    """
    if not math.isfinite(seconds):
        raise ValueError(f"non-finite timestamp: {seconds!r}")
    return round(seconds * NS_PER_SEC)


def seconds_from_ns(ns: int) -> float:
    return ns / NS_PER_SEC


def format_seconds(ns: int) -> str:
    """Exact decimal rendering of a nanosecond timestamp, e.g. ``1.5``."""
    sign = "-" if ns < 0 else ""
    ns = abs(ns)
    whole, frac = divmod(ns, NS_PER_SEC)
    if frac == 0:
        return f"{sign}{whole}.0"
    return f"{sign}{whole}." + f"{frac:09d}".rstrip("0")


def format_duration(ns: int) -> str:
    """Human-friendly duration text that re-parses to the same value."""
    if ns % NS_PER_MIN == 0:
        return f"{ns // NS_PER_MIN}min"
    if ns % NS_PER_SEC == 0:
        return f"{ns // NS_PER_SEC}s"
    if ns % NS_PER_MS == 0:
        return f"{ns // NS_PER_MS}ms"
    return f"{format_seconds(ns)}s"
