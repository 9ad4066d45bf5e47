"""
Train a fixed-point booster and certify it
==========================================

Everything here is integer arithmetic: features are quantized once, and the
certifier replays the whole training run to decide whether the model is the
one training must produce.
"""

import numpy as np

from fxgb import Dataset, Hyperparams, train
from fxgb.cert import certify
from fxgb.datasets import make_gaussians, quantize_matrix
from fxgb.fxp import FxpConfig

cfg = FxpConfig(20)  # 20 fractional bits, so 1.0 is the raw integer 2**20
x, y = make_gaussians(200, 4, seed=0, separation=1.5)
ds = Dataset(quantize_matrix(x, cfg), y, cfg)
print("first row as raw integers:", ds.x[0])

hp = Hyperparams.from_reals(trees=5, depth=3, bins=16, eta=0.3, lam=1.0, gamma=0.0, cfg=cfg)
model, leaves = train(ds, hp)
print(f"base logit z0 = {model.z0} raw, {model.z0 / cfg.scale:.4f} real")

# Trees are full binary trees in heap order; pruned nodes hold a dummy split
# whose threshold is the smallest representable value, so every sample goes right.
tree = model.trees[0]
print("tree 0 features:", tree.f, "\ntree 0 leaf weights:", tree.w / cfg.scale)

acc = float((model.predict(ds.x) == ds.y).mean())
print(f"training accuracy {acc:.3f}")

report = certify(ds, model, leaves)
print("certify:", "accept" if report.accepted else "reject", report.failures)

# Certification also works without the trainer's leaf trace; it is recomputed
# from the model.
print("certify without trace:", certify(ds, model).accepted)
print("predictions agree with the final score row:", np.array_equal(model.decision(ds.x), leaves.scores[-1]))
