import json
import os

import numpy as np

from fxgb import commit as cm
from fxgb.datasets import make_gaussians, quantize_matrix
from fxgb.fxp import FxpConfig
from fxgb.serialize import model_from_json, model_to_json
from fxgb.train import Dataset, Hyperparams, train

CFG = FxpConfig(20)


def trained(seed=0):
    x, y = make_gaussians(40, 3, seed=seed)
    ds = Dataset(quantize_matrix(x, CFG), y, CFG)
    return ds, train(ds, Hyperparams.from_reals(2, 2, 8, cfg=CFG))[0]


def test_canonical_bytes_stable():
    ds, model = trained()
    assert cm.canonical_bytes(model) == cm.canonical_bytes(model.copy())
    assert cm.canonical_bytes(ds) == cm.canonical_bytes(Dataset(ds.x.copy(), ds.y.copy(), CFG))


def test_reordered_json_same_bytes():
    _, model = trained()
    doc = json.loads(model_to_json(model))
    shuffled = json.dumps(dict(reversed(list(doc.items()))))
    assert cm.canonical_bytes(model_from_json(shuffled)) == cm.canonical_bytes(model)


def test_single_value_change_changes_bytes():
    ds, model = trained()
    bad = model.copy()
    bad.trees[1].w[0] += 1
    assert cm.canonical_bytes(bad) != cm.canonical_bytes(model)
    x = ds.x.copy()
    x[3, 1] += 1
    assert cm.canonical_bytes(Dataset(x, ds.y, CFG)) != cm.canonical_bytes(ds)


def test_commit_open():
    data, r = b"some model bytes", os.urandom(32)
    c = cm.commit(data, r)
    assert cm.verify_open(c, data, r)
    assert not cm.verify_open(c, data, os.urandom(32))
    assert not cm.verify_open(c, b"some model bytez", r)
    assert len(c.hex) == 64 and c.hex == c.hex.lower()


def test_domain_separation():
    data, r = b"x", bytes(32)
    assert cm.commit(data, r, cm.TAG_DATASET) != cm.commit(data, r, cm.TAG_MODEL)


def test_no_collisions_and_byte_sensitivity():
    rng = np.random.default_rng(1)
    seen = set()
    for _ in range(10_000):
        data = rng.bytes(int(rng.integers(0, 64)))
        r = rng.bytes(32)
        seen.add(cm.commit(data, r).digest)
    assert len(seen) == 10_000
    data, r = rng.bytes(40), rng.bytes(32)
    base = cm.commit(data, r).digest
    for i in range(len(data)):
        flipped = bytearray(data)
        flipped[i] ^= 0xFF
        assert cm.commit(bytes(flipped), r).digest != base
    # length prefix separates data from randomness
    assert cm.commit(data + r[:1], r).digest != cm.commit(data, r).digest


def test_statement_deterministic_and_binding():
    ds, model = trained()
    r1, r2 = cm.seeded_randomness(5, "dataset"), cm.seeded_randomness(5, "model")
    assert r1 == cm.seeded_randomness(5, "dataset") and r1 != r2
    s = cm.statement(cm.commit_object(ds, r1), cm.commit_object(model, r2))
    assert s == cm.statement(cm.commit_object(ds, r1), cm.commit_object(model, r2))
    _, other = trained(1)
    assert s != cm.statement(cm.commit_object(ds, r1), cm.commit_object(other, r2))
    assert len(s) == 32
