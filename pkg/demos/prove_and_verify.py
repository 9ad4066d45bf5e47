"""
Commit, lower to constraints, replay
====================================

The certification run is compiled into a transcript of linear,
multiplication, lookup and equality constraints over the field of integers
modulo 2**61 - 1. A verifier rebuilds the expected circuit shape from public
metadata, checks the commitments in the header, and replays every constraint.
"""

import numpy as np

from fxgb import Dataset, Hyperparams, train
from fxgb import commit as cm
from fxgb.cs import compile_cert, dumps, loads, structure_digest, template_transcript, verify_transcript
from fxgb.cs.transcript import gap_violations
from fxgb.datasets import make_gaussians, quantize_matrix
from fxgb.fxp import FxpConfig
from fxgb.mutate import mutate_model

cfg = FxpConfig(20)
x, y = make_gaussians(24, 2, seed=5, separation=2.0)
ds = Dataset(quantize_matrix(x, cfg), y, cfg)
model, leaves = train(ds, Hyperparams.from_reals(2, 2, 8, cfg=cfg))

c_ds = cm.commit_object(ds, cm.fresh_randomness())
c_model = cm.commit_object(model, cm.fresh_randomness())
st = cm.statement(c_ds, c_model)

tr = compile_cert(ds, model, leaves, statement=st)
print(f"{tr.n_wires} wires, {len(tr.constraints)} constraints")
print("by section:", dict(tr.counts_by_section()))
print("wires outside their allowed window:", len(gap_violations(tr)))

blob = dumps(tr)
received = loads(blob)
same_shape = structure_digest(received) == structure_digest(template_transcript(received.meta))
chi = int(np.random.default_rng().integers(1, 2**61 - 1))
print(f"{len(blob)} bytes; structure matches public circuit: {same_shape}")
print("verify:", verify_transcript(received, chi, expected_statement=st))

bad = mutate_model(model, ds.x, "weight", np.random.default_rng(1))
print("verify with a mutated leaf weight:", verify_transcript(compile_cert(ds, bad, statement=st), chi))
