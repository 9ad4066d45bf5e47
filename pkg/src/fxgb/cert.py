"""Plaintext certification of a trained model against its dataset.

``certify`` re-derives everything the trainer decided and accepts iff the
model is exactly what :func:`fxgb.train.train` would output. Leaf indices are
taken as witness (or recomputed from the model) and validated path by path;
histograms are rebuilt leaf-to-root, so no per-node sample set is ever
materialized.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fxp
from .errors import BoundViolation
from .train import (
    F_DUM,
    T_DUM,
    Dataset,
    LeafAssignment,
    Model,
    Tree,
    argmax_split,
    base_logit,
    grad_hess,
    leaf_g_limit,
    leaf_weight,
    path_nodes,
    prebin,
    split_gains,
)

CHECKS = ("shape", "labels", "logit", "scores", "inference", "leaf_weight", "split", "bound")


@dataclass(frozen=True)
class Failure:
    tree: int  # -1 for dataset-level checks
    check: str
    index: int

    def to_json(self) -> dict:
        return {"tree": self.tree, "check": self.check, "index": self.index}


@dataclass
class CertReport:
    failures: list[Failure] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.accepted

    def checks(self) -> set[str]:
        return {f.check for f in self.failures}

    def to_json(self) -> dict:
        return {"accepted": self.accepted, "failures": [f.to_json() for f in self.failures]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


@dataclass(eq=False)
class Histograms:
    """G and H indexed ``[feature][heap node][bin]``; node 0 and bin 0 unused."""

    G: np.ndarray
    H: np.ndarray

    @property
    def n_leaves(self) -> int:
        return self.G.shape[1] // 2


def validate_labels(y) -> list[int]:
    """Positions (0-based) of every non-binary label."""
    y = np.asarray(y, dtype=np.int64)
    return np.flatnonzero(y * (1 - y)).tolist()


def validate_logit(y, z0: int, hp) -> bool:
    return base_logit(y, hp) == z0


def validate_inference(x, tree: Tree, leaves) -> list[int]:
    """Samples whose claimed leaf disagrees with their branch decisions."""
    x = np.asarray(x, dtype=np.int64)
    leaves = np.asarray(leaves, dtype=np.int64)
    h = tree.depth
    in_range = (leaves >= 1) & (leaves <= tree.n_leaves)
    safe = np.where(in_range, leaves, 1)
    path = path_nodes(safe, h)  # (n, h) heap ids, root first
    feat = tree.f[path - 1]
    bits = (tree.t[path - 1] <= np.take_along_axis(x, feat, axis=1)).astype(np.int64)
    weights = 1 << np.arange(h - 1, -1, -1)
    ok = in_range & (safe + (1 << h) - 1 == (1 << h) + bits @ weights)
    return np.flatnonzero(~ok).tolist()


def init_hists(z_prev, y, bin_id, leaves, n_leaves: int, bins: int, cfg) -> Histograms:
    g, h = grad_hess(z_prev, y, cfg)
    n, d = bin_id.shape
    G = np.zeros((d, 2 * n_leaves, bins + 1), dtype=np.int64)
    H = np.zeros_like(G)
    node = np.asarray(leaves, dtype=np.int64) + n_leaves - 1
    feats = np.broadcast_to(np.arange(d), (n, d))
    nodes = np.broadcast_to(node[:, None], (n, d))
    np.add.at(G, (feats, nodes, bin_id), np.broadcast_to(g[:, None], (n, d)))
    np.add.at(H, (feats, nodes, bin_id), np.broadcast_to(h[:, None], (n, d)))
    for ell in range(n_leaves - 1, 0, -1):
        G[:, ell] = G[:, 2 * ell] + G[:, 2 * ell + 1]
        H[:, ell] = H[:, 2 * ell] + H[:, 2 * ell + 1]
    return Histograms(G, H)


def validate_leaf_weights(hists: Histograms, w, hp) -> tuple[list[int], list[int]]:
    """Return (wrong leaves, leaves over the |G| bound), both 1-based."""
    N = hists.n_leaves
    wrong, over = [], []
    limit = leaf_g_limit(hp.cfg)
    for leaf in range(1, N + 1):
        G = int(hists.G[0, leaf + N - 1].sum())
        H = int(hists.H[0, leaf + N - 1].sum())
        if abs(G) > limit:
            over.append(leaf)
            continue
        if leaf_weight(G, H, hp) != int(w[leaf - 1]):
            wrong.append(leaf)
    return wrong, over


def validate_splits(hists: Histograms, tree: Tree, edges, hp) -> tuple[list[int], list[int]]:
    """Return (wrong internal nodes, nodes over the |G| bound).

    Nodes are visited top-down so each sees its parent's terminal flag. The
    expected split is the lexicographically first argmax, as the trainer
    produces; the supplied split must equal it (or the dummy once terminal).
    """
    N = hists.n_leaves
    terminal = np.zeros(2 * N, dtype=bool)
    wrong, over = [], []
    for ell in range(1, N):
        try:
            gains = split_gains(hists.G[:, ell], hists.H[:, ell], hp)
        except BoundViolation:
            over.append(ell)
            terminal[ell] = True
            continue
        f_star, b_star, gain_star = argmax_split(gains)
        terminal[ell] = gain_star <= 0 or terminal[ell // 2]
        expect = (F_DUM, T_DUM) if terminal[ell] else (f_star, int(edges[f_star, b_star]))
        if (int(tree.f[ell - 1]), int(tree.t[ell - 1])) != expect:
            wrong.append(ell)
    return wrong, over


def _shape_failures(ds: Dataset, model: Model, leaf_assignment) -> list[Failure]:
    hp = model.hp
    out = []
    if ds.cfg != hp.cfg:
        out.append(Failure(-1, "shape", 0))
    if len(model.trees) != hp.trees:
        out.append(Failure(-1, "shape", len(model.trees)))
    N = hp.n_leaves
    for k, tree in enumerate(model.trees):
        if tree.f.shape != (N - 1,) or tree.t.shape != (N - 1,) or tree.w.shape != (N,):
            out.append(Failure(k, "shape", 0))
        elif ((tree.f < 0) | (tree.f >= ds.d)).any():
            out.append(Failure(k, "shape", int(np.flatnonzero((tree.f < 0) | (tree.f >= ds.d))[0]) + 1))
    if leaf_assignment is not None and leaf_assignment.leaves.shape != (len(model.trees), ds.n):
        out.append(Failure(-1, "shape", 1))
    return out


def certify(ds: Dataset, model: Model, leaf_assignment: LeafAssignment | None = None, threads: int = 1) -> CertReport:
    hp = model.hp
    report = CertReport(_shape_failures(ds, model, leaf_assignment))
    if not report.accepted:
        return report
    report.failures += [Failure(-1, "labels", i) for i in validate_labels(ds.y)]
    if not report.accepted:
        return report
    bins = prebin(ds.x, hp.bins)
    if not validate_logit(ds.y, model.z0, hp):
        report.failures.append(Failure(-1, "logit", 0))

    m, N = len(model.trees), hp.n_leaves
    if leaf_assignment is None:
        leaves = np.array([t.apply(ds.x) for t in model.trees]).reshape(m, ds.n)
    else:
        leaves = np.asarray(leaf_assignment.leaves, dtype=np.int64)

    # Score recurrence. Out-of-range leaves are caught by inference; clamp
    # only so the recurrence stays computable.
    z = np.empty((m + 1, ds.n), dtype=np.int64)
    z[0] = model.z0
    for k, tree in enumerate(model.trees):
        idx = np.clip(leaves[k], 1, N) - 1
        z[k + 1] = z[k] - fxp.mul_arr(hp.eta, tree.w[idx], hp.cfg)
    if leaf_assignment is not None:
        supplied = np.asarray(leaf_assignment.scores)
        if supplied.shape != z.shape:
            report.failures.append(Failure(-1, "scores", 0))
        else:
            for k in np.flatnonzero((supplied != z).any(axis=1)).tolist():
                report.failures.append(Failure(k - 1, "scores", int(np.flatnonzero(supplied[k] != z[k])[0])))

    def check_tree(k: int) -> list[Failure]:
        tree = model.trees[k]
        out = [Failure(k, "inference", i) for i in validate_inference(ds.x, tree, leaves[k])]
        hists = init_hists(z[k], ds.y, bins.bin_id, np.clip(leaves[k], 1, N), N, hp.bins, hp.cfg)
        wrong, over = validate_leaf_weights(hists, tree.w, hp)
        out += [Failure(k, "leaf_weight", leaf) for leaf in wrong]
        out += [Failure(k, "bound", leaf + N - 1) for leaf in over]
        wrong, over = validate_splits(hists, tree, bins.edges, hp)
        out += [Failure(k, "split", ell) for ell in wrong]
        out += [Failure(k, "bound", ell) for ell in over]
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_tree = list(pool.map(check_tree, range(m)))
    else:
        per_tree = [check_tree(k) for k in range(m)]
    for failures in per_tree:
        report.failures += failures
    return report
