"""
Fixed-point versus float training
=================================

The float reference runs the same control flow with the same piecewise
sigmoid and series logit in double precision, so the only difference left is
rounding. Held-out accuracy of the two should stay within one percentage point.
"""

import time

from fxgb import Dataset, Hyperparams, train
from fxgb.datasets import make_gaussians, quantize_matrix, train_test_split
from fxgb.fxp import FxpConfig
from fxgb.reference import train_float_reference


def parity(name, x, y, trees, depth, bins):
    cfg = FxpConfig(20)
    tr, te = train_test_split(len(y), 0.3, seed=0)
    raw = quantize_matrix(x, cfg)
    t0 = time.perf_counter()
    model, _ = train(Dataset(raw[tr], y[tr], cfg), Hyperparams.from_reals(trees, depth, bins, cfg=cfg))
    t1 = time.perf_counter()
    ref = train_float_reference(x[tr], y[tr], trees, depth, bins)
    t2 = time.perf_counter()
    acc_fixed = (model.predict(raw[te]) == y[te]).mean()
    acc_float = (ref.predict(x[te]) == y[te]).mean()
    print(f"{name}: fixed {acc_fixed:.4f} ({t1 - t0:.2f}s) float {acc_float:.4f} ({t2 - t1:.2f}s) |delta| {abs(acc_fixed - acc_float):.4f}")


parity("synthetic", *make_gaussians(1000, 8, 0, separation=2.0), 10, 3, 16)

try:
    from fxgb.datasets import breast_cancer

    parity("breast cancer", *breast_cancer(), 50, 4, 128)
except ImportError:
    print("breast cancer: install scikit-learn to run this comparison")
