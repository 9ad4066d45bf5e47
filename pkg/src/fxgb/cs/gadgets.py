"""Comparison, range, division and truncation gadgets.

Every gadget computes an honest witness from the wire values already in the
transcript. Keyword overrides (``s=``, ``z=``, ``r=`` ...) replace parts of
that witness so tests can build forgeries and watch verification fail.

Signed quantities use the one-bit-gap encoding; bit 60 of a field element is
its sign. All divisions truncate toward zero.
"""

from __future__ import annotations

from ..errors import BoundViolation
from ..field import MSB_BIT, P, check_division_bounds, f_inv, to_signed
from .transcript import DIFF

_LOW_MASK = (1 << MSB_BIT) - 1


def g_nonzero(tr, x: int, *, w: int | None = None, u: int | None = None) -> int:
    """Wire carrying 1 if x != 0 else 0, via u*x = w and (1-w)*x = 0."""
    xv = tr.val(x)
    if w is None:
        w = 1 if xv else 0
    if u is None:
        u = f_inv(xv) if xv else 0
    wire_w = tr.new(w)
    wire_u = tr.new(u, hint=True)
    tr.assert_mul(wire_u, x, wire_w)
    tr.assert_mul(tr.lin([(-1, wire_w)], 1), x, tr.const(0))
    return wire_w


def _limbs_of(v: int, nbits: int, width: int) -> list[tuple[int, int]]:
    """(value, width) limbs covering the low ``nbits`` bits of v."""
    out = []
    shift = 0
    while shift < nbits:
        k = min(width, nbits - shift)
        out.append(((v >> shift) & ((1 << k) - 1), k))
        shift += k
    return out


def range_bits(tr, v: int, nbits: int, *, limbs: list[int] | None = None) -> None:
    """Prove 0 <= v < 2**nbits by lookup-checked limbs of width <= d."""
    if nbits == 0:
        tr.assert_equal(v, 0)
        return
    parts = _limbs_of(tr.val(v), nbits, tr.params.d)
    if limbs is not None:
        parts = [(val, k) for val, (_, k) in zip(limbs, parts)]
    terms = [(-1, v)]
    shift = 0
    for val, k in parts:
        wire = tr.new(val)
        tr.lookup(wire, k)
        terms.append((1 << shift, wire))
        shift += k
    tr.assert_lin(terms)


def msb_with_flag(tr, z: int, *, s: int | None = None, limbs: list[int] | None = None) -> tuple[int, int]:
    """Return wires (s, w): the sign bit of z and the flag 1{z != 0}.

    z = 2^60 s + sum_i 2^{d i} limb_i with lookup-checked limbs. The only
    field element with two such decompositions is 0 (s=1, all limbs maximal,
    which wraps to p); the constraint (1 - w) s = 0 removes it.
    """
    zv = tr.val(z)
    gp = tr.params
    if s is None:
        s = zv >> MSB_BIT
    if limbs is None:
        low = (zv - (s << MSB_BIT)) & _LOW_MASK
        limbs = [(low >> (gp.d * i)) & ((1 << gp.d) - 1) for i in range(gp.t)]
    s_w = tr.new(s)
    tr.assert_mul(s_w, s_w, s_w)
    terms = [(-1, z), (1 << MSB_BIT, s_w)]
    for i, limb in enumerate(limbs):
        wire = tr.new(limb)
        tr.lookup(wire, gp.d)
        terms.append((1 << (gp.d * i), wire))
    tr.assert_lin(terms)
    w = g_nonzero(tr, z)
    tr.assert_mul(tr.lin([(-1, w)], 1), s_w, tr.const(0))
    return s_w, w


def g_msb(tr, z: int, **forge) -> int:
    return msb_with_flag(tr, z, **forge)[0]


def g_compare(tr, x: int, y: int, **forge) -> int:
    """Wire holding 1{x < y} for gap-range operands."""
    return g_msb(tr, tr.lin([(1, x), (-1, y)], kind=DIFF), **forge)


def g_range(tr, x: int, lo: int, hi: int) -> None:
    """Assert lo <= x <= hi."""
    tr.assert_equal(g_compare(tr, x, tr.const(lo)), 0)
    tr.assert_equal(g_compare(tr, tr.const(hi), x), 0)


def g_abs(tr, x: int, *, s: int | None = None) -> tuple[int, int, int]:
    """Return wires (|x|, sign bit, nonzero flag)."""
    alpha, w = msb_with_flag(tr, x, s=s)
    return tr.mul(tr.lin([(-2, alpha)], 1), x), alpha, w


def g_bool(tr, b: int) -> None:
    tr.assert_mul(b, b, b)


def g_or(tr, a: int, b: int) -> int:
    return tr.lin([(1, a), (1, b), (-1, tr.mul(a, b))])


def g_division(
    tr,
    x: int,
    y: int,
    *,
    m_d: int | None = None,
    m_q: int | None = None,
    z: int | None = None,
    r: int | None = None,
) -> int:
    """Wire z with z = trunc(x / y), proven through absolute values.

    |x| = |y| |z| + |r| with 0 <= |r| < |y|, |y| <= m_d and |z| < m_q; since
    m_d * m_q < p/2 the product cannot wrap. The sign of z is the XOR of the
    operand signs, forced to 0 when the quotient is 0.
    """
    m_d = tr.params.m_d if m_d is None else m_d
    m_q = tr.params.m_q if m_q is None else m_q
    check_division_bounds(m_d, m_q)
    xs, ys = to_signed(tr.val(x)), to_signed(tr.val(y))
    if z is None:
        q = 0 if ys == 0 else abs(xs) // abs(ys) * (-1 if (xs < 0) != (ys < 0) else 1)
        if tr.strict and (ys == 0 or abs(ys) > m_d or abs(q) >= m_q):
            raise BoundViolation(f"division {xs}/{ys} outside static bounds m_d={m_d}, m_q={m_q}")
    else:
        q = z
    if r is None:
        r = abs(xs) - abs(ys) * abs(to_signed(q % P))
    z_w = tr.new(q)
    xbar, alpha, _ = g_abs(tr, x)
    ybar, beta, _ = g_abs(tr, y)
    zbar, sigma, z_nz = g_abs(tr, z_w)
    rbar = tr.new(r)
    tr.assert_lin([(1, xbar), (-1, tr.mul(ybar, zbar)), (-1, rbar)])
    tr.assert_equal(g_compare(tr, rbar, tr.const(0)), 0)
    tr.assert_equal(g_compare(tr, rbar, ybar), 1)
    tr.assert_equal(g_compare(tr, tr.const(m_d), ybar), 0)
    tr.assert_equal(g_compare(tr, zbar, tr.const(m_q)), 1)
    xor = tr.lin([(1, alpha), (1, beta), (-2, tr.mul(alpha, beta))])
    tr.assert_mul(xor, z_nz, sigma)
    return z_w


def g_truncation(tr, x: int, f: int, *, z: int | None = None, r: int | None = None) -> int:
    """Wire z = trunc(x / 2^f) using bit decompositions instead of a divisor.

    |x| = 2^f |z| + r with r < 2^f and |z| < 2^(60-f); the sum stays below p,
    so no quotient that only holds modulo p can pass.
    """
    if not 0 <= f < MSB_BIT:
        raise ValueError(f"truncation shift {f} out of range")
    xs = to_signed(tr.val(x))
    zbar_v = abs(xs) >> f if z is None else abs(z)
    if r is None:
        r = abs(xs) - (zbar_v << f)
    xbar, alpha, _ = g_abs(tr, x)
    zbar = tr.new(zbar_v)
    rbar = tr.new(r)
    tr.assert_lin([(1, xbar), (-(1 << f), zbar), (-1, rbar)])
    range_bits(tr, rbar, f)
    range_bits(tr, zbar, MSB_BIT - f)
    sigma = tr.mul(alpha, g_nonzero(tr, zbar))
    return tr.mul(tr.lin([(-2, sigma)], 1), zbar)


def g_clip(tr, x: int, lo: int, hi: int) -> int:
    """Wire min(max(x, lo), hi) for constant bounds."""
    below = g_compare(tr, x, tr.const(lo))
    above = g_compare(tr, tr.const(hi), x)
    inside = tr.mul(tr.lin([(-1, below), (-1, above)], 1), x)
    return tr.lin([(1, inside), (lo, below), (hi, above)])


def g_dot(tr, bits, wires) -> int:
    """sum_i bits[i] * wires[i]."""
    return tr.lin([(1, tr.mul(b, w)) for b, w in zip(bits, wires)])


__all__ = [
    "P",
    "g_abs",
    "g_bool",
    "g_clip",
    "g_compare",
    "g_division",
    "g_dot",
    "g_msb",
    "g_nonzero",
    "g_or",
    "g_range",
    "g_truncation",
    "msb_with_flag",
    "range_bits",
]
