"""Quick self-check of the arithmetic gadgets, used by ``fxgb gadget-selftest``."""

from __future__ import annotations

import numpy as np

from .cs import gadgets as gd
from .cs.transcript import Transcript, verify_transcript
from .field import GAP, GadgetParams, encode_signed, f_inv, to_signed


def _accepts(tr, rng) -> bool:
    return bool(verify_transcript(tr, int(rng.integers(1, 2**61 - 1))))


def run_selftest(seed: int = 0, samples: int = 2000) -> dict:
    rng = np.random.default_rng(seed)
    results = {}

    tr = Transcript()
    span = range(-16, 17)
    outs = []
    for x in span:
        for y in span:
            outs.append((x < y, gd.g_compare(tr, tr.new(encode_signed(x)), tr.new(encode_signed(y)))))
    for _ in range(samples):
        x, y = (int(v) for v in rng.integers(-GAP, GAP + 1, size=2))
        outs.append((x < y, gd.g_compare(tr, tr.new(encode_signed(x)), tr.new(encode_signed(y)))))
    results["compare"] = _accepts(tr, rng) and all(tr.val(w) == int(want) for want, w in outs)

    gp = GadgetParams()
    tr = Transcript(gp)
    checks = []
    for _ in range(samples // 4):
        y = int(rng.integers(1, gp.m_d + 1)) * (1 if rng.random() < 0.5 else -1)
        x = int(rng.integers(-(gp.m_q - 1), gp.m_q)) * abs(y) // 2
        q = abs(x) // abs(y) * (-1 if (x < 0) != (y < 0) else 1)
        checks.append((q, gd.g_division(tr, tr.new(encode_signed(x)), tr.new(encode_signed(y)))))
    results["division"] = _accepts(tr, rng) and all(to_signed(tr.val(w)) == q for q, w in checks)

    tr = Transcript()
    checks = []
    for _ in range(samples // 4):
        x, f = int(rng.integers(-(2**59), 2**59)), int(rng.integers(0, 40))
        want = abs(x) >> f if x >= 0 else -(abs(x) >> f)
        checks.append((want, gd.g_truncation(tr, tr.new(encode_signed(x)), f)))
    results["truncation"] = _accepts(tr, rng) and all(to_signed(tr.val(w)) == q for q, w in checks)

    # Forgeries: each must be rejected.
    tr = Transcript()
    gd.g_msb(tr, tr.new(0), s=1, limbs=[(1 << gp.d) - 1] * gp.t)
    forge_msb = not _accepts(tr, rng)

    tr = Transcript()
    x, y = 7, 2
    wrong_q = 4
    gd.g_division(tr, tr.new(x), tr.new(y), z=wrong_q, r=x - y * wrong_q)
    forge_div = not _accepts(tr, rng)

    tr = Transcript()
    # z = x / y mod p satisfies x = y z in the field but is not the integer quotient.
    gd.g_division(tr, tr.new(7), tr.new(2), z=7 * f_inv(2), r=0)
    forge_wrap = not _accepts(tr, rng)
    results["forgeries_rejected"] = forge_msb and forge_div and forge_wrap

    results["passed"] = all(results.values())
    return results
