"""Modular arithmetic on the circular m-bit identifier space.

Identifiers are plain Python ints in ``[0, 2**m)``.  Every function here is
pure and total over valid identifiers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ParameterError

MAX_BITS = 63


@dataclass(frozen=True)
class RingParams:
    """Bit width of the address space; the ring holds ``2**m`` identifiers."""

    m: int
    size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.m, int) or not 1 <= self.m <= MAX_BITS:
            raise ParameterError(f"m must be an integer in [1, {MAX_BITS}], got {self.m!r}")
        object.__setattr__(self, "size", 1 << self.m)

    def check(self, ident: int) -> int:
        if not 0 <= ident < self.size:
            raise ParameterError(f"identifier {ident} outside [0, 2^{self.m})")
        return ident


def cw_distance(a: int, b: int, ring: RingParams) -> int:
    """Clockwise distance travelled going from ``a`` to ``b``."""
    return (b - a) % ring.size


def in_cw_interval(
    x: int,
    lo: int,
    hi: int,
    ring: RingParams,
    lo_closed: bool = False,
    hi_closed: bool = True,
) -> bool:
    """True iff ``x`` lies on the clockwise arc from ``lo`` to ``hi``.

    Defaults to the half-open responsibility interval ``(lo, hi]``.  When
    ``lo == hi`` the arc is taken to be the full circle, so ``(n, n]`` is the
    whole ring and ``(n, n)`` is everything except ``n``.
    """
    span = cw_distance(lo, hi, ring) or ring.size
    d = cw_distance(lo, x, ring)
    if d == 0:
        return lo_closed or (lo == hi and hi_closed)
    if d < span:
        return True
    return d == span and hi_closed


def offset_back(o: int, delta: int, ring: RingParams) -> int:
    """Address that precedes ``o`` by exactly ``delta`` positions."""
    if not 0 <= delta < ring.size:
        raise ParameterError(f"delta must lie in [0, 2^{ring.m} - 1], got {delta}")
    return (o - delta) % ring.size


def round_half_away(value: float) -> int:
    """Nearest integer, ties away from zero."""
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def lerp_toward(n: int, r: int, alpha: float, ring: RingParams) -> int:
    """Point on the arc ``[n, r]`` whose distance to ``r`` is ``alpha`` of ``|r - n|``.

    The offset from ``r`` is rounded half away from zero and clamped so the
    result never leaves the arc.
    """
    if not 0.0 <= alpha < 1.0:
        raise ParameterError(f"alpha must lie in [0, 1), got {alpha}")
    dist = cw_distance(n, r, ring)
    step = min(round_half_away(alpha * dist), dist)
    return (r - step) % ring.size
