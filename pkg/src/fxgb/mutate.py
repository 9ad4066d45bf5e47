"""Single-field model mutations used to probe certifier soundness."""

from __future__ import annotations

import numpy as np

from .train import F_DUM, T_DUM, Model, prebin

KINDS = ("z0", "feat", "thresh", "weight", "dummy")

# The check a certifier is expected to name for each kind.
EXPECTED_CHECK = {"z0": "logit", "feat": "split", "thresh": "split", "weight": "leaf_weight", "dummy": "split"}


def _delta(rng: np.random.Generator) -> int:
    return int(rng.integers(1, 1000)) * int(rng.choice([-1, 1]))


def mutate_model(model: Model, x: np.ndarray, kind: str, rng: np.random.Generator) -> Model:
    """Return a copy of ``model`` differing in exactly one field of class ``kind``.

    ``x`` supplies the bin edges so threshold mutations land on a real edge.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown mutation kind {kind!r}; choose from {KINDS}")
    out = model.copy()
    m = len(out.trees)
    N = model.hp.n_leaves
    d = np.asarray(x).shape[1]
    if kind == "z0":
        out.z0 += _delta(rng)
        return out
    k = int(rng.integers(m))
    tree = out.trees[k]
    if kind == "weight":
        leaf = int(rng.integers(N))
        tree.w[leaf] += _delta(rng)
        return out
    node = int(rng.integers(N - 1))
    edges = prebin(x, model.hp.bins).edges
    if kind == "feat":
        if d < 2:
            raise ValueError("feature mutation needs at least two features")
        choices = [f for f in range(d) if f != tree.f[node]]
        tree.f[node] = int(rng.choice(choices))
    elif kind == "thresh":
        f = int(tree.f[node])
        candidates = set(edges[f, 1:].tolist()) | {T_DUM}
        candidates.discard(int(tree.t[node]))
        tree.t[node] = int(rng.choice(sorted(candidates)))
    else:  # dummy <-> real toggle
        if tree.f[node] == F_DUM and tree.t[node] == T_DUM:
            f = int(rng.integers(d))
            tree.f[node] = f
            tree.t[node] = int(edges[f, int(rng.integers(1, model.hp.bins + 1))])
        else:
            tree.f[node] = F_DUM
            tree.t[node] = T_DUM
    return out
