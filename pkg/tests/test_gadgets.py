import numpy as np
import pytest

from fxgb.cs import gadgets as gd
from fxgb.cs.transcript import HINT, Transcript, verify_transcript
from fxgb.errors import BoundViolation, InvalidBounds
from fxgb.field import GAP, MSB_BIT, P, GadgetParams, encode_signed, f_inv, f_mul, f_sub, to_signed

CHI = 0x1234_5678_9ABC


def ok(tr) -> bool:
    return bool(verify_transcript(tr, CHI))


def inputs(tr, *vals):
    return [tr.new(encode_signed(v)) for v in vals]


def trunc_div(x, y):
    q = abs(x) // abs(y)
    return -q if (x < 0) != (y < 0) else q


def perturbations_all_rejected(tr, first_aux: int) -> bool:
    """Every +-1 change of a prover-committed wire breaks some constraint.

    A zero inverse hint is skipped: u * 0 = 0 holds for every u, so that wire
    carries no information.
    """
    for wire in range(first_aux, tr.n_wires):
        if tr.kinds[wire] == HINT and tr.values[wire] == 0:
            continue
        for delta in (1, -1):
            bad = tr.copy()
            bad.values[wire] = (bad.values[wire] + delta) % P
            if ok(bad):
                return False
    return True


# -- nonzero and msb -----------------------------------------------------------------


def test_nonzero_examples():
    for x, w in ((0, 0), (7, 1)):
        tr = Transcript()
        out = gd.g_nonzero(tr, tr.new(x))
        assert tr.val(out) == w and ok(tr)
    tr = Transcript()
    gd.g_nonzero(tr, tr.new(7), w=0)
    assert not ok(tr)
    tr = Transcript()
    gd.g_nonzero(tr, tr.new(0), w=1)
    assert not ok(tr)


@pytest.mark.parametrize("v,s", [(5, 0), (-3, 1), (0, 0), (GAP, 0), (-GAP, 1)])
def test_msb_examples(v, s):
    tr = Transcript()
    out = gd.g_msb(tr, inputs(tr, v)[0])
    assert tr.val(out) == s and ok(tr)


def test_msb_zero_forgery_rejected():
    gp = GadgetParams()
    tr = Transcript(gp)
    limbs = [(1 << gp.d) - 1] * gp.t
    # 2^60 + sum of maximal limbs = 2^61 - 1 = p, i.e. zero in the field
    assert ((1 << MSB_BIT) + sum(l << (gp.d * i) for i, l in enumerate(limbs))) % P == 0
    gd.g_msb(tr, tr.new(0), s=1, limbs=limbs)
    res = verify_transcript(tr, CHI)
    assert not res
    assert "mul" in res.reason


def test_msb_flipped_sign_rejected():
    for v in (5, -3, 1, -1):
        tr = Transcript()
        z = inputs(tr, v)[0]
        gd.g_msb(tr, z, s=1 - int(to_signed(tr.val(z)) < 0))
        assert not ok(tr)


# -- compare ----------------------------------------------------------------------


def test_compare_examples():
    tr = Transcript()
    a, b = inputs(tr, 5, 9)
    assert tr.val(gd.g_compare(tr, a, b)) == 1
    assert tr.val(gd.g_compare(tr, b, a)) == 0
    assert ok(tr)


def test_compare_exhaustive_small():
    tr = Transcript()
    wires = {v: inputs(tr, v)[0] for v in range(-64, 65)}
    outs = [(x < y, gd.g_compare(tr, wires[x], wires[y])) for x in range(-64, 65) for y in range(-64, 65)]
    assert all(tr.val(w) == int(want) for want, w in outs)
    assert ok(tr)


def test_compare_random_gap_pairs():
    rng = np.random.default_rng(1)
    tr = Transcript()
    pairs = rng.integers(-GAP, GAP + 1, size=(20_000, 2))
    pairs[:100, 1] = pairs[:100, 0]  # include equal operands
    outs = []
    for x, y in pairs.tolist():
        outs.append((x < y, gd.g_compare(tr, *inputs(tr, x, y))))
    assert all(tr.val(w) == int(want) for want, w in outs)
    assert ok(tr)


def test_compare_perturbations():
    rng = np.random.default_rng(2)
    for x, y in rng.integers(-1000, 1000, size=(10, 2)).tolist() + [[3, 3], [-GAP, GAP]]:
        tr = Transcript()
        a, b = inputs(tr, x, y)
        gd.g_compare(tr, a, b)
        assert ok(tr) and perturbations_all_rejected(tr, 2)


def test_range_examples():
    for x, accepted in ((5, True), (11, False), (10, True), (0, True), (-1, False)):
        tr = Transcript()
        gd.g_range(tr, inputs(tr, x)[0], 0, 10)
        assert ok(tr) is accepted, x


def test_clip():
    tr = Transcript()
    outs = [(min(max(x, -4), 6), gd.g_clip(tr, inputs(tr, x)[0], -4, 6)) for x in range(-10, 11)]
    assert all(to_signed(tr.val(w)) == want for want, w in outs) and ok(tr)


# -- division -------------------------------------------------------------------------


def test_division_examples():
    tr = Transcript()
    z = gd.g_division(tr, *inputs(tr, 17, 5))
    assert to_signed(tr.val(z)) == 3 and ok(tr)
    tr = Transcript()
    gd.g_division(tr, *inputs(tr, 17, 5), z=3, r=2)
    assert ok(tr)
    tr = Transcript()
    gd.g_division(tr, *inputs(tr, 17, 5), z=2, r=7)
    assert not ok(tr)


@pytest.mark.parametrize("x,y", [(17, -5), (-17, 5), (-17, -5), (3, 5), (-3, 5), (0, -7), (2**40, 2**30), (-(2**59 - 1), 2**30)])
def test_division_signs_and_zero_quotient(x, y):
    tr = Transcript()
    z = gd.g_division(tr, *inputs(tr, x, y))
    assert to_signed(tr.val(z)) == trunc_div(x, y) and ok(tr)


def test_division_random_matches_oracle():
    gp = GadgetParams()
    rng = np.random.default_rng(3)
    tr = Transcript(gp)
    outs = []
    for _ in range(5_000):
        y = int(rng.integers(1, gp.m_d + 1)) * int(rng.choice([-1, 1]))
        q = int(rng.integers(0, gp.m_q))
        x = (q * abs(y) + int(rng.integers(0, abs(y)))) * int(rng.choice([-1, 1]))
        if abs(x) > GAP:
            continue
        outs.append((trunc_div(x, y), gd.g_division(tr, *inputs(tr, x, y))))
    assert all(to_signed(tr.val(w)) == want for want, w in outs)
    assert ok(tr)


def test_division_other_witnesses_rejected():
    rng = np.random.default_rng(4)
    for _ in range(40):
        y = int(rng.integers(1, 50)) * int(rng.choice([-1, 1]))
        x = int(rng.integers(-2000, 2000))
        q = trunc_div(x, y)
        r = abs(x) - abs(y) * abs(q)
        # neighbouring quotients with the residue that keeps |x| = |y||z| + r exact
        for z in (q - 1, q + 1):
            tr = Transcript()
            gd.g_division(tr, *inputs(tr, x, y), z=z, r=abs(x) - abs(y) * abs(z))
            assert not ok(tr), (x, y, z)
        for dr in (-1, 1):
            tr = Transcript()
            gd.g_division(tr, *inputs(tr, x, y), z=q, r=r + dr)
            assert not ok(tr), (x, y, dr)


def test_division_perturbations():
    for x, y in ((17, 5), (-17, 5), (3, -5), (0, 9), (123456, 789)):
        tr = Transcript()
        a, b = inputs(tr, x, y)
        gd.g_division(tr, a, b)
        assert ok(tr) and perturbations_all_rejected(tr, 2), (x, y)


def test_division_wraparound_forgery_rejected():
    for x, y in ((17, 5), (1000, 7), (-1000, 7), (5, 3)):
        q, r = trunc_div(x, y), abs(x) - abs(y) * abs(trunc_div(x, y))
        for r_forged in range(abs(y)):
            if r_forged == r:
                continue
            # |x| = |y| z' + r' holds in the field but z' is no integer quotient
            z_forged = f_mul(f_sub(abs(x), r_forged), f_inv(abs(y)))
            assert z_forged >= GadgetParams().m_q
            assert (abs(y) * z_forged + r_forged) % P == abs(x)
            z_signed = z_forged if (x < 0) == (y < 0) else (-z_forged) % P
            tr = Transcript()
            gd.g_division(tr, *inputs(tr, x, y), z=z_signed, r=r_forged)
            assert not ok(tr)


def test_division_bounds():
    with pytest.raises(InvalidBounds):
        gd.g_division(Transcript(), 0, 0, m_d=2**31, m_q=2**31)
    tr = Transcript()
    tr.strict = True
    with pytest.raises(BoundViolation):
        gd.g_division(tr, *inputs(tr, 1, 0))
    tr = Transcript()
    tr.strict = True
    with pytest.raises(BoundViolation):
        gd.g_division(tr, *inputs(tr, 2**50, 3))
    # Outside strict mode the out-of-bound witness is emitted and rejected.
    tr = Transcript()
    gd.g_division(tr, *inputs(tr, 2**50, 3))
    assert not ok(tr)


# -- truncation -------------------------------------------------------------------------


def test_truncation_examples():
    tr = Transcript()
    z = gd.g_truncation(tr, inputs(tr, 100)[0], 4)
    assert to_signed(tr.val(z)) == 6 and ok(tr)
    tr = Transcript()
    gd.g_truncation(tr, inputs(tr, 100)[0], 4, z=6, r=4)
    assert ok(tr)
    tr = Transcript()
    gd.g_truncation(tr, inputs(tr, 100)[0], 4, z=7)
    assert not ok(tr)
    tr = Transcript()
    z = gd.g_truncation(tr, inputs(tr, -100)[0], 4)
    assert to_signed(tr.val(z)) == -6 and ok(tr)
    tr = Transcript()
    z = gd.g_truncation(tr, inputs(tr, -15)[0], 4)
    assert to_signed(tr.val(z)) == 0 and tr.val(z) == 0 and ok(tr)


def test_truncation_random_matches_oracle():
    rng = np.random.default_rng(5)
    tr = Transcript()
    outs = []
    for x, f in zip(rng.integers(-GAP, GAP + 1, size=10_000).tolist(), rng.integers(0, MSB_BIT, size=10_000).tolist()):
        outs.append((trunc_div(x, 1 << f), gd.g_truncation(tr, inputs(tr, x)[0], f)))
    assert all(to_signed(tr.val(w)) == want for want, w in outs)
    assert ok(tr)


def test_truncation_perturbations_and_wrap():
    for x, f in ((100, 4), (-100, 4), (7, 0), (2**50 + 3, 20), (-(2**33), 12)):
        tr = Transcript()
        gd.g_truncation(tr, inputs(tr, x)[0], f)
        assert ok(tr) and perturbations_all_rejected(tr, 1)
        zbar, r = abs(x) >> f, abs(x) % (1 << f)
        for dz in (-1, 1):
            tr = Transcript()
            gd.g_truncation(tr, inputs(tr, x)[0], f, z=zbar + dz)
            assert not ok(tr)
        if f:
            r_forged = (r + 1) % (1 << f)
            z_forged = f_mul(f_sub(abs(x), r_forged), f_inv(1 << f))
            tr = Transcript()
            gd.g_truncation(tr, inputs(tr, x)[0], f, z=z_forged, r=r_forged)
            assert not ok(tr)


def test_truncation_shift_range():
    with pytest.raises(ValueError):
        gd.g_truncation(Transcript(), 0, MSB_BIT)
