"""
Single-field mutations are caught
=================================

Each mutation class changes one field of an honestly trained model. The
certifier rejects every mutant and names the check that failed.
"""

import numpy as np

from fxgb import Dataset, Hyperparams, train
from fxgb.cert import certify
from fxgb.datasets import make_gaussians, quantize_matrix
from fxgb.fxp import FxpConfig
from fxgb.mutate import KINDS, mutate_model

cfg = FxpConfig(20)
x, y = make_gaussians(150, 5, seed=3)
ds = Dataset(quantize_matrix(x, cfg), y, cfg)
model, _ = train(ds, Hyperparams.from_reals(4, 3, 16, cfg=cfg))

rng = np.random.default_rng(0)
for kind in KINDS:
    outcomes = [certify(ds, mutate_model(model, ds.x, kind, rng)) for _ in range(25)]
    rejected = sum(not r.accepted for r in outcomes)
    named = sorted(set().union(*(r.checks() for r in outcomes)))
    print(f"{kind:>7}: rejected {rejected}/25, failing checks seen: {named}")

# A duplicated feature column ties every gain. The trainer takes the first
# feature; swapping in the identical later column is still rejected.
dup = Dataset(np.hstack([ds.x[:, :1], ds.x[:, :1]]), ds.y, cfg)
m, _ = train(dup, Hyperparams.from_reals(1, 1, 8, cfg=cfg))
swapped = m.copy()
swapped.trees[0].f[0] = 1
print("tie-swapped split accepted?", certify(dup, swapped).accepted)
