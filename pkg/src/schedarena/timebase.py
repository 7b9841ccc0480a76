"""Exact time arithmetic on a fixed resolution grid.

All times, costs and work amounts are ``fractions.Fraction`` values.  Values
coming from the outside world (floats in JSON, RNG draws) are snapped to the
grid so that schedules, traces and metrics reproduce bit for bit.
"""
from __future__ import annotations

import math
from fractions import Fraction

RESOLUTION = Fraction(1, 10**6)
INF = math.inf


def as_time(value, resolution: Fraction = RESOLUTION) -> Fraction:
    """Convert ``value`` to a Fraction on the resolution grid (nearest point)."""
    if isinstance(value, Fraction):
        if (value / resolution).denominator == 1:
            return value
        return round(value / resolution) * resolution
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return as_time(Fraction(value), resolution)
    if not math.isfinite(value):
        raise ValueError(f"time value must be finite, got {value!r}")
    return round(Fraction(value) / resolution) * resolution


def ceil_time(value, resolution: Fraction = RESOLUTION) -> Fraction:
    """Smallest grid point >= value."""
    value = Fraction(value)
    return math.ceil(value / resolution) * resolution


def floor_time(value, resolution: Fraction = RESOLUTION) -> Fraction:
    value = Fraction(value)
    return math.floor(value / resolution) * resolution


def to_float(value):
    """JSON-friendly representation; None and inf pass through."""
    if value is None:
        return None
    if value == INF:
        return INF
    return float(value)
