"""
The arithmetic gadgets up close
===============================

Signed values live in a window of width 2**59 around zero, so bit 60 of a
field element acts as its sign. Comparison, division and truncation are all
built from that observation plus lookup-checked 12-bit limbs.
"""

from fxgb.cs import gadgets as gd
from fxgb.cs.transcript import Transcript, verify_transcript
from fxgb.field import GadgetParams, encode_signed, f_inv, to_signed

gp = GadgetParams()
print(f"limbs: {gp.t} x {gp.d} bits; division bounds m_d={gp.m_d}, m_q={gp.m_q}")

tr = Transcript()
a, b = tr.new(encode_signed(-7)), tr.new(encode_signed(3))
print("-7 < 3 ->", tr.val(gd.g_compare(tr, a, b)))
print("-7 / 3 ->", to_signed(tr.val(gd.g_division(tr, a, b))))
print("-7 >> 1 (toward zero) ->", to_signed(tr.val(gd.g_truncation(tr, a, 1))))
print("honest transcript verifies:", bool(verify_transcript(tr, 12345)))

# Zero has a second decomposition: sign bit 1 with every limb maximal sums to p.
forged = Transcript()
gd.g_msb(forged, forged.new(0), s=1, limbs=[(1 << gp.d) - 1] * gp.t)
print("forged sign of zero:", verify_transcript(forged, 12345))

# In the field 7 = 2 * (7/2 mod p); the quotient bound rejects that witness.
wrap = Transcript()
gd.g_division(wrap, wrap.new(7), wrap.new(2), z=7 * f_inv(2), r=0)
print("mod-p quotient forgery:", verify_transcript(wrap, 12345))
