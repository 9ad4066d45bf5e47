"""Signed fixed-point arithmetic on raw integers.

A value ``v`` is represented by the integer ``raw = trunc(v * S)`` with
``S = 2**frac_bits``. Every rounding step truncates toward zero, which is
what the division gadget proves (it works on absolute values and attaches
the sign separately).

Scalar functions take and return Python ints. The ``*_arr`` variants operate
on int64 numpy arrays and are used on the hot paths of training and
certification; callers keep operands small enough that int64 never wraps.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import DivByZero, InvalidBounds, RangeExceeded

P = (1 << 61) - 1
RANGE_MAX = P // 4

DEFAULT_FRAC_BITS = 20
MIN_FRAC_BITS = 4
MAX_FRAC_BITS = 28


@dataclass(frozen=True)
class FxpConfig:
    frac_bits: int = DEFAULT_FRAC_BITS

    def __post_init__(self) -> None:
        if not isinstance(self.frac_bits, int) or not (
            MIN_FRAC_BITS <= self.frac_bits <= MAX_FRAC_BITS
        ):
            raise ValueError(
                f"frac_bits must be an integer in [{MIN_FRAC_BITS}, {MAX_FRAC_BITS}], "
                f"got {self.frac_bits!r}"
            )

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def one(self) -> int:
        return self.scale


def check_range(raw: int) -> int:
    if -RANGE_MAX <= raw <= RANGE_MAX:
        return raw
    raise RangeExceeded(f"fixed-point value {raw} exceeds +/-{RANGE_MAX}")


def tdiv(a: int, b: int) -> int:
    """Integer division truncating toward zero."""
    if b == 0:
        raise DivByZero("division by zero")
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def quantize(real, cfg: FxpConfig) -> int:
    """Scale ``real`` by ``S`` and truncate toward zero.

    Accepts ints, floats, ``Decimal``, ``Fraction`` and numeric strings. Floats
    are converted exactly (no decimal round trip), strings go through
    ``Decimal`` so ``"0.1"`` means one tenth rather than its binary neighbour.
    """
    if isinstance(real, str):
        real = Decimal(real.strip())
    if isinstance(real, Decimal):
        if not real.is_finite():
            raise RangeExceeded(f"cannot quantize {real}")
        real = Fraction(real)
    elif isinstance(real, float):
        if real != real or real in (float("inf"), float("-inf")):
            raise RangeExceeded(f"cannot quantize {real}")
        real = Fraction(real)
    elif isinstance(real, (int, np.integer)):
        real = Fraction(int(real))
    elif isinstance(real, np.floating):
        real = Fraction(float(real))
    elif not isinstance(real, Rational):
        raise TypeError(f"cannot quantize object of type {type(real).__name__}")
    scaled = real * cfg.scale
    raw = scaled.numerator // scaled.denominator if scaled >= 0 else -((-scaled.numerator) // scaled.denominator)
    return check_range(raw)


def to_real(raw: int, cfg: FxpConfig) -> float:
    return raw / cfg.scale


def fxp_mul(x: int, y: int, cfg: FxpConfig) -> int:
    prod = x * y
    mag = abs(prod) >> cfg.frac_bits
    return check_range(-mag if prod < 0 else mag)


def fxp_div(x: int, y: int, cfg: FxpConfig) -> int:
    if y == 0:
        raise DivByZero("fixed-point division by zero")
    mag = (abs(x) << cfg.frac_bits) // abs(y)
    return check_range(-mag if (x < 0) != (y < 0) else mag)


def sigmoid_wide(z: int, cfg: FxpConfig) -> int:
    """Piecewise-linear logistic: 0 below -2, 1 above 2, (z+2)/4 between."""
    two = 2 * cfg.scale
    if z <= -two:
        return 0
    if z >= two:
        return cfg.scale
    return (z + two) // 4


def logit_from_prob(p: int, cfg: FxpConfig) -> int:
    """Log-odds of ``p`` via the degree-5 odd series of atanh(2p-1), doubled."""
    u = 2 * p - cfg.scale
    u2 = fxp_mul(u, u, cfg)
    u3 = fxp_mul(u2, u, cfg)
    u5 = fxp_mul(u3, u2, cfg)
    return check_range(2 * (u + tdiv(u3, 3) + tdiv(u5, 5)))


def clip(x: int, lo: int, hi: int) -> int:
    if lo > hi:
        raise InvalidBounds(f"clip bounds reversed: lo={lo} > hi={hi}")
    return lo if x < lo else hi if x > hi else x


# -- vectorized int64 variants ------------------------------------------------------


def _check_arr(a: np.ndarray) -> np.ndarray:
    if a.size and int(np.abs(a).max()) > RANGE_MAX:
        raise RangeExceeded("fixed-point array value exceeds the encodable range")
    return a


def tdiv_arr(a: np.ndarray, b: int) -> np.ndarray:
    """Elementwise truncating division of an int64 array by a positive int."""
    if b <= 0:
        raise ValueError("tdiv_arr expects a positive divisor")
    a = np.asarray(a, dtype=np.int64)
    return np.sign(a) * (np.abs(a) // b)


def mul_arr(x, y, cfg: FxpConfig) -> np.ndarray:
    prod = np.asarray(x, dtype=np.int64) * np.asarray(y, dtype=np.int64)
    return _check_arr(np.sign(prod) * (np.abs(prod) >> cfg.frac_bits))


def div_arr(x, y, cfg: FxpConfig) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if np.any(y == 0):
        raise DivByZero("fixed-point division by zero")
    if x.size and int(np.abs(x).max()) >= 1 << (62 - cfg.frac_bits):
        raise RangeExceeded("dividend too large for the int64 fast path")
    mag = (np.abs(x) << cfg.frac_bits) // np.abs(y)
    return _check_arr(np.where((x < 0) != (y < 0), -mag, mag))


def sigmoid_arr(z, cfg: FxpConfig) -> np.ndarray:
    z = np.asarray(z, dtype=np.int64)
    two = 2 * cfg.scale
    mid = (z + two) // 4
    return np.where(z <= -two, 0, np.where(z >= two, cfg.scale, mid)).astype(np.int64)


def clip_arr(x, lo: int, hi: int) -> np.ndarray:
    if lo > hi:
        raise InvalidBounds(f"clip bounds reversed: lo={lo} > hi={hi}")
    return np.clip(np.asarray(x, dtype=np.int64), lo, hi)
