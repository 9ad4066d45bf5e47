"""Arithmetic in the Mersenne field F_p, p = 2^61 - 1, and signed encoding.

Signed integers are embedded with a one-bit gap: non-negative values x map to
x, negative values to p + x, and only |x| <= floor(p/4) is admitted. Inside
that window bit 60 of the representative is the sign, and the difference of
two admitted values never wraps past it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidBounds, OutOfGapRange, ZeroInverse

NBITS = 61
P = (1 << NBITS) - 1
GAP = P // 4
HALF = P // 2
MSB_BIT = NBITS - 1


def reduce(x: int) -> int:
    """Fold an arbitrary non-negative integer below p using 2^61 = 1 (mod p)."""
    while x >> NBITS:
        x = (x & P) + (x >> NBITS)
    return 0 if x == P else x


def f_add(a: int, b: int) -> int:
    s = a + b
    return s - P if s >= P else s


def f_sub(a: int, b: int) -> int:
    s = a - b
    return s + P if s < 0 else s


def f_neg(a: int) -> int:
    return P - a if a else 0


def f_mul(a: int, b: int) -> int:
    return reduce(a * b)


def f_inv(a: int) -> int:
    a %= P
    if a == 0:
        raise ZeroInverse("zero has no inverse in F_p")
    return pow(a, P - 2, P)


def in_gap(v: int) -> bool:
    return 0 <= v < P and (v <= GAP or v >= P - GAP)


def encode_signed(x: int) -> int:
    if -GAP <= x <= GAP:
        return x if x >= 0 else P + x
    raise OutOfGapRange(f"{x} outside the one-bit-gap window +/-{GAP}")


def decode_signed(v: int) -> int:
    if not in_gap(v):
        raise OutOfGapRange(f"field element {v} is not a gap-range encoding")
    return v - P if v > HALF else v


def to_signed(v: int) -> int:
    """Centered lift of any field element to (-p/2, p/2], without range checks."""
    v %= P
    return v - P if v > HALF else v


def msb_semantic(v: int) -> int:
    if not in_gap(v):
        raise OutOfGapRange(f"field element {v} is not a gap-range encoding")
    return (v >> MSB_BIT) & 1


@dataclass(frozen=True)
class GadgetParams:
    """Limb layout of the MSB proof plus default division bounds.

    ``d * t`` must cover the 60 low bits; ``m_d`` bounds denominators and
    ``m_q`` quotients, with ``m_d * m_q < p / 2`` so ``y * z`` never wraps.
    """

    d: int = 12
    t: int = 5
    m_d: int = 1 << 30
    m_q: int = (1 << 30) - 1

    def __post_init__(self) -> None:
        if self.d * self.t != NBITS - 1:
            raise ValueError(f"d*t must equal {NBITS - 1}, got {self.d}*{self.t}")
        check_division_bounds(self.m_d, self.m_q)

    @property
    def n(self) -> int:
        return NBITS


def check_division_bounds(m_d: int, m_q: int) -> None:
    if m_d < 1 or m_q < 1 or 2 * m_d * m_q >= P:
        raise InvalidBounds(f"division bounds violate m_d*m_q < p/2: m_d={m_d}, m_q={m_q}")
