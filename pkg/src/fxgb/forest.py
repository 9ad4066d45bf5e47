"""Gini random forest on pre-binned features, with its certifier.

Trees are complete (no pruning) and each is grown on a seeded subsample
``I_k``. Leaf weights are the fraction of class-1 samples in the leaf, in
fixed point. Certification accepts any maximizing split, not only the first.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import fxp
from .cert import CertReport, Failure, validate_inference, validate_labels
from .fxp import FxpConfig
from .train import Dataset, Tree, prebin


@dataclass(frozen=True)
class ForestParams:
    trees: int
    depth: int
    bins: int

    @property
    def n_leaves(self) -> int:
        return 1 << self.depth

    def validate(self) -> "ForestParams":
        if self.trees < 1 or not 1 <= self.depth <= 12 or not 2 <= self.bins <= 256:
            raise ValueError(f"invalid forest parameters {self}")
        return self


@dataclass(eq=False)
class ForestSpec:
    index_sets: list[np.ndarray]
    params: ForestParams
    seed: int

    def __post_init__(self) -> None:
        self.index_sets = [np.sort(np.asarray(s, dtype=np.int64)) for s in self.index_sets]
        if len(self.index_sets) != self.params.trees:
            raise ValueError("one index set per tree is required")
        if any(s.size == 0 for s in self.index_sets):
            raise ValueError("index sets must be nonempty")

    def digests(self) -> list[str]:
        return [index_digest(s) for s in self.index_sets]


def index_digest(indices: np.ndarray) -> str:
    data = np.sort(np.asarray(indices, dtype="<u8")).tobytes()
    return hashlib.sha256(b"fxgb/forest/index-set/v1" + data).hexdigest()


def make_forest_spec(n: int, params: ForestParams, seed: int, fraction: float = 0.7) -> ForestSpec:
    """Seeded subsets without replacement, one per tree."""
    rng = np.random.default_rng(seed)
    size = max(1, int(round(fraction * n)))
    sets = [rng.choice(n, size=size, replace=False) for _ in range(params.trees)]
    return ForestSpec(sets, params.validate(), seed)


@dataclass(eq=False)
class ForestModel:
    trees: list[Tree]
    params: ForestParams
    cfg: FxpConfig
    index_digests: list[str]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Mean leaf weight across trees (raw fixed-point)."""
        votes = np.array([t.w[t.apply(x) - 1] for t in self.trees])
        return votes.sum(axis=0) // len(self.trees)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return (2 * self.predict_proba(x) > self.cfg.scale).astype(np.int64)

    def copy(self) -> "ForestModel":
        return ForestModel([t.copy() for t in self.trees], self.params, self.cfg, list(self.index_digests))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ForestModel)
            and self.params == other.params
            and self.cfg == other.cfg
            and self.index_digests == other.index_digests
            and all(a == b for a, b in zip(self.trees, other.trees))
            and len(self.trees) == len(other.trees)
        )


# -- shared arithmetic ---------------------------------------------------------------


def _frac(a: np.ndarray, b: np.ndarray, S: int) -> np.ndarray:
    """a*S // b, defined as 0 where b == 0."""
    return np.where(b > 0, (a * S) // np.maximum(b, 1), 0)


def _impurity(c0: np.ndarray, c1: np.ndarray, cfg: FxpConfig) -> np.ndarray:
    S = cfg.scale
    tot = c0 + c1
    f0, f1 = _frac(c0, tot, S), _frac(c1, tot, S)
    imp = S - ((f0 * f0) >> cfg.frac_bits) - ((f1 * f1) >> cfg.frac_bits)
    return np.where(tot > 0, imp, 0)


def gini_gains(counts: np.ndarray, cfg: FxpConfig) -> np.ndarray:
    """Gini gain per candidate (f, b) from per-bin class counts.

    ``counts`` has shape (d, B+1, 2) with bin 0 unused; the result has shape
    (d, B) with column j holding b = j + 1. An empty side contributes 0.
    """
    cum = np.cumsum(counts[:, 1:, :], axis=1)
    tot = cum[:, -1:, :]
    left = np.concatenate([np.zeros_like(tot), cum[:, :-1, :]], axis=1)
    right = tot - left
    nL = left.sum(axis=2)
    nR = right.sum(axis=2)
    n = nL + nR
    S = cfg.scale
    parent = _impurity(tot[..., 0], tot[..., 1], cfg)
    wl = (_frac(nL, n, S) * _impurity(left[..., 0], left[..., 1], cfg)) >> cfg.frac_bits
    wr = (_frac(nR, n, S) * _impurity(right[..., 0], right[..., 1], cfg)) >> cfg.frac_bits
    return parent - wl - wr


def class_fraction(c0: int, c1: int, cfg: FxpConfig) -> int:
    return fxp.fxp_div(c1 * cfg.scale, (c0 + c1) * cfg.scale, cfg) if c0 + c1 else 0


def _node_counts(y, bin_id, bins: int) -> np.ndarray:
    n, d = bin_id.shape
    counts = np.zeros((d, bins + 1, 2), dtype=np.int64)
    np.add.at(counts, (np.broadcast_to(np.arange(d), (n, d)), bin_id, np.broadcast_to(y[:, None], (n, d))), 1)
    return counts


# -- training ------------------------------------------------------------------------


def _grow(y, bin_id, edges, params: ForestParams, cfg: FxpConfig) -> Tree:
    N = params.n_leaves
    f_arr = np.empty(N - 1, dtype=np.int64)
    t_arr = np.empty(N - 1, dtype=np.int64)
    w_arr = np.empty(N, dtype=np.int64)
    members = {1: np.arange(y.shape[0])}
    for node in range(1, N):
        idx = members.pop(node)
        gains = gini_gains(_node_counts(y[idx], bin_id[idx], params.bins), cfg)
        f, j = divmod(int(np.argmax(gains)), params.bins)
        b = j + 1
        f_arr[node - 1] = f
        t_arr[node - 1] = edges[f, b]
        go_left = bin_id[idx, f] < b
        members[2 * node] = idx[go_left]
        members[2 * node + 1] = idx[~go_left]
    for leaf in range(1, N + 1):
        idx = members.pop(leaf + N - 1)
        c1 = int(y[idx].sum())
        w_arr[leaf - 1] = class_fraction(idx.size - c1, c1, cfg)
    return Tree(f_arr, t_arr, w_arr)


def forest_train(ds: Dataset, spec: ForestSpec) -> ForestModel:
    ds.validate()
    params = spec.params.validate()
    bins = prebin(ds.x, params.bins)
    trees = [_grow(ds.y[s], bins.bin_id[s], bins.edges, params, ds.cfg) for s in spec.index_sets]
    return ForestModel(trees, params, ds.cfg, spec.digests())


# -- certification -------------------------------------------------------------------


def init_hists_label(y, bin_id, leaves, n_leaves: int, bins: int) -> np.ndarray:
    """Class counts indexed ``[feature][heap node][bin][class]``."""
    n, d = bin_id.shape
    H = np.zeros((d, 2 * n_leaves, bins + 1, 2), dtype=np.int64)
    node = np.asarray(leaves, dtype=np.int64) + n_leaves - 1
    np.add.at(
        H,
        (
            np.broadcast_to(np.arange(d), (n, d)),
            np.broadcast_to(node[:, None], (n, d)),
            bin_id,
            np.broadcast_to(np.asarray(y)[:, None], (n, d)),
        ),
        1,
    )
    for ell in range(n_leaves - 1, 0, -1):
        H[:, ell] = H[:, 2 * ell] + H[:, 2 * ell + 1]
    return H


def validate_leaf_weights_label(H: np.ndarray, w, cfg: FxpConfig) -> list[int]:
    N = H.shape[1] // 2
    bad = []
    for leaf in range(1, N + 1):
        c0, c1 = (int(v) for v in H[0, leaf + N - 1, 1:].sum(axis=0))
        if class_fraction(c0, c1, cfg) != int(w[leaf - 1]):
            bad.append(leaf)
    return bad


def validate_splits_gini(H: np.ndarray, tree: Tree, edges, cfg: FxpConfig) -> list[int]:
    """Internal nodes whose split is not a maximizer of the Gini gain.

    The claimed threshold is mapped back to the smallest bin whose edge equals
    it; a threshold that is no edge of the claimed feature is rejected.
    """
    N = H.shape[1] // 2
    d = H.shape[0]
    bad = []
    for ell in range(1, N):
        f = int(tree.f[ell - 1])
        if not 0 <= f < d:
            bad.append(ell)
            continue
        hits = np.flatnonzero(edges[f, 1:] == tree.t[ell - 1])
        if hits.size == 0:
            bad.append(ell)
            continue
        gains = gini_gains(H[:, ell], cfg)
        if gains[f, hits[0]] < gains.max():
            bad.append(ell)
    return bad


def forest_certify(ds: Dataset, model: ForestModel, spec: ForestSpec) -> CertReport:
    report = CertReport([Failure(-1, "labels", i) for i in validate_labels(ds.y)])
    params = model.params
    N = params.n_leaves
    if (
        params != spec.params
        or len(model.trees) != params.trees
        or model.index_digests != spec.digests()
        or any(s.max() >= ds.n or s.min() < 0 for s in spec.index_sets)
    ):
        report.failures.append(Failure(-1, "shape", 0))
    for k, tree in enumerate(model.trees):
        if tree.f.shape != (N - 1,) or tree.w.shape != (N,) or ((tree.f < 0) | (tree.f >= ds.d)).any():
            report.failures.append(Failure(k, "shape", 0))
    if not report.accepted:
        return report
    bins = prebin(ds.x, params.bins)
    for k, (tree, idx) in enumerate(zip(model.trees, spec.index_sets)):
        x_k = ds.x[idx]
        leaves = tree.apply(x_k)
        report.failures += [Failure(k, "inference", i) for i in validate_inference(x_k, tree, leaves)]
        H = init_hists_label(ds.y[idx], bins.bin_id[idx], leaves, N, params.bins)
        report.failures += [Failure(k, "leaf_weight", leaf) for leaf in validate_leaf_weights_label(H, tree.w, ds.cfg)]
        report.failures += [Failure(k, "split", ell) for ell in validate_splits_gini(H, tree, bins.edges, ds.cfg)]
    return report


def mutate_forest(model: ForestModel, x: np.ndarray, kind: str, rng: np.random.Generator, y=None, spec=None) -> ForestModel:
    """Weight perturbation or a strictly worse threshold/feature on one node.

    Split mutations need ``y`` and ``spec`` to find a candidate whose gain is
    strictly below the node's maximum; equal-gain alternatives are legitimate
    and would be accepted.
    """
    out = model.copy()
    k = int(rng.integers(len(out.trees)))
    tree = out.trees[k]
    if kind == "weight":
        tree.w[int(rng.integers(tree.w.size))] += int(rng.integers(1, 1000)) * int(rng.choice([-1, 1]))
        return out
    if kind != "split":
        raise ValueError(f"unknown forest mutation {kind!r}")
    bins = prebin(x, model.params.bins)
    idx = spec.index_sets[k]
    N = model.params.n_leaves
    H = init_hists_label(np.asarray(y)[idx], bins.bin_id[idx], tree.apply(np.asarray(x)[idx]), N, model.params.bins)
    for ell in rng.permutation(np.arange(1, N)).tolist():
        gains = gini_gains(H[:, ell], model.cfg)
        # Colliding edges map back to their first bin, so judge each candidate
        # by the gain of that bin.
        first = np.array([[np.flatnonzero(bins.edges[f, 1:] == e)[0] for e in bins.edges[f, 1:]] for f in range(gains.shape[0])])
        seen = np.take_along_axis(gains, first, axis=1)
        worse = np.argwhere(seen < gains.max())
        if worse.size:
            f, j = worse[int(rng.integers(len(worse)))]
            tree.f[ell - 1] = int(f)
            tree.t[ell - 1] = int(bins.edges[f, j + 1])
            return out
    raise ValueError("no node admits a strictly worse split")
