"""Deterministic fixed-point gradient-boosted trees for binary classification.

Trees are complete binary trees of depth ``h`` stored in heap order: node 1
is the root and node ``l`` has children ``2l`` and ``2l+1``. Leaves are the
heap nodes ``N .. 2N-1`` with ``N = 2**h``; leaf index ``l`` (1-based) is heap
node ``l + N - 1``. A sample goes right iff ``t <= x[f]``.

Features are 0-based. Bin ids are 1-based; bin slot 0 of every feature holds
the dummy threshold so that a pruned node ``(F_DUM, T_DUM)`` corresponds to
split index ``b = 0`` and sends every sample right.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import isqrt

import numpy as np

from . import fxp
from .errors import BoundViolation, DatasetError
from .fxp import FxpConfig, RANGE_MAX

F_DUM = 0
T_DUM = -RANGE_MAX
B_DUM = 0

# |G| must stay below sqrt(p/2) before squaring and below p/(2S) before the
# S-lift of a leaf-weight division.
G_SQ_LIMIT = isqrt((fxp.P - 1) // 2)


def leaf_g_limit(cfg: FxpConfig) -> int:
    return (fxp.P - 1) // (2 * cfg.scale)


@dataclass(frozen=True)
class Hyperparams:
    trees: int
    depth: int
    bins: int
    eta: int
    lam: int
    gamma: int
    p_min: int
    cfg: FxpConfig = field(default_factory=FxpConfig)

    @classmethod
    def from_reals(
        cls,
        trees: int,
        depth: int,
        bins: int,
        eta=0.3,
        lam=1.0,
        gamma=0.0,
        p_min=1e-6,
        cfg: FxpConfig | None = None,
    ) -> "Hyperparams":
        cfg = cfg or FxpConfig()
        q = lambda v: fxp.quantize(v, cfg)  # noqa: E731
        return cls(trees, depth, bins, q(eta), q(lam), q(gamma), max(1, q(p_min)), cfg)

    @property
    def p_max(self) -> int:
        return self.cfg.scale - self.p_min

    @property
    def n_leaves(self) -> int:
        return 1 << self.depth

    def validate(self) -> "Hyperparams":
        S = self.cfg.scale
        problems = []
        if self.trees < 1:
            problems.append("trees must be >= 1")
        if not 1 <= self.depth <= 12:
            problems.append("depth must be in [1, 12]")
        if not 2 <= self.bins <= 256:
            problems.append("bins must be in [2, 256]")
        if self.lam <= 0:
            problems.append("lambda must be positive")
        if not 0 < self.eta <= S:
            problems.append("eta must be in (0, 1]")
        if self.gamma < 0:
            # A negative gamma would let an empty child of a pruned node
            # report positive gain, breaking the terminal-flag recursion.
            problems.append("gamma must be non-negative")
        if not 1 <= self.p_min < S // 2:
            problems.append("p_min must be at least one raw unit and below 0.5")
        if problems:
            raise ValueError("; ".join(problems))
        return self


@dataclass(frozen=True, eq=False)
class Dataset:
    x: np.ndarray  # (n, d) int64 raw fixed-point features
    y: np.ndarray  # (n,) int64 labels in {0, 1}
    cfg: FxpConfig = field(default_factory=FxpConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.ascontiguousarray(self.x, dtype=np.int64))
        object.__setattr__(self, "y", np.ascontiguousarray(self.y, dtype=np.int64))
        if self.x.ndim != 2 or self.y.ndim != 1 or self.x.shape[0] != self.y.shape[0]:
            raise DatasetError(f"shape mismatch: x {self.x.shape}, y {self.y.shape}")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def validate(self) -> "Dataset":
        if self.n < 1 or self.d < 1:
            raise DatasetError("dataset needs at least one row and one feature")
        bad = np.flatnonzero(self.y * (1 - self.y))
        if bad.size:
            raise DatasetError(f"label at row {int(bad[0])} is {int(self.y[bad[0]])}, expected 0 or 1")
        if np.abs(self.x).max() >= RANGE_MAX:
            raise DatasetError("feature magnitude reaches the dummy threshold")
        return self

    @classmethod
    def from_reals(cls, x, y, cfg: FxpConfig | None = None) -> "Dataset":
        cfg = cfg or FxpConfig()
        x = np.asarray(x, dtype=float)
        raw = np.array([[fxp.quantize(float(v), cfg) for v in row] for row in x], dtype=np.int64)
        return cls(raw.reshape(x.shape), np.asarray(y, dtype=np.int64), cfg)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.x[rows], self.y[rows], self.cfg)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dataset)
            and self.cfg == other.cfg
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )


@dataclass(frozen=True, eq=False)
class BinTable:
    edges: np.ndarray  # (d, B+1); column 0 is T_DUM
    bin_id: np.ndarray  # (n, d) in [1, B]

    @property
    def bins(self) -> int:
        return self.edges.shape[1] - 1


@dataclass(eq=False)
class Tree:
    f: np.ndarray  # (N-1,) feature per internal heap node 1..N-1
    t: np.ndarray  # (N-1,) threshold per internal node
    w: np.ndarray  # (N,) leaf weights

    def __post_init__(self) -> None:
        self.f = np.asarray(self.f, dtype=np.int64)
        self.t = np.asarray(self.t, dtype=np.int64)
        self.w = np.asarray(self.w, dtype=np.int64)

    @property
    def n_leaves(self) -> int:
        return self.w.shape[0]

    @property
    def depth(self) -> int:
        return self.n_leaves.bit_length() - 1

    def is_dummy(self, node: int) -> bool:
        return int(self.f[node - 1]) == F_DUM and int(self.t[node - 1]) == T_DUM

    def apply(self, x: np.ndarray) -> np.ndarray:
        """1-based leaf index reached by every row of ``x``."""
        x = np.asarray(x, dtype=np.int64)
        rows = np.arange(x.shape[0])
        node = np.ones(x.shape[0], dtype=np.int64)
        for _ in range(self.depth):
            f = self.f[node - 1]
            right = self.t[node - 1] <= x[rows, f]
            node = 2 * node + right
        return node - (self.n_leaves - 1)

    def copy(self) -> "Tree":
        return Tree(self.f.copy(), self.t.copy(), self.w.copy())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Tree)
            and np.array_equal(self.f, other.f)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.w, other.w)
        )


@dataclass(eq=False)
class Model:
    trees: list[Tree]
    z0: int
    hp: Hyperparams

    @property
    def cfg(self) -> FxpConfig:
        return self.hp.cfg

    def decision(self, x: np.ndarray) -> np.ndarray:
        """Final logits for every row of ``x``."""
        z = np.full(np.asarray(x).shape[0], self.z0, dtype=np.int64)
        for tree in self.trees:
            z = z - fxp.mul_arr(self.hp.eta, tree.w[tree.apply(x) - 1], self.cfg)
        return z

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return fxp.sigmoid_arr(self.decision(x), self.cfg)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return (self.decision(x) > 0).astype(np.int64)

    def copy(self) -> "Model":
        return Model([t.copy() for t in self.trees], self.z0, self.hp)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Model)
            and self.z0 == other.z0
            and self.hp == other.hp
            and len(self.trees) == len(other.trees)
            and all(a == b for a, b in zip(self.trees, other.trees))
        )


@dataclass(eq=False)
class LeafAssignment:
    leaves: np.ndarray  # (m, n) 1-based leaf indices
    scores: np.ndarray  # (m+1, n); row 0 is z0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LeafAssignment)
            and np.array_equal(self.leaves, other.leaves)
            and np.array_equal(self.scores, other.scores)
        )


# -- building blocks shared with the certifier ---------------------------------------


def prebin(x: np.ndarray, bins: int) -> BinTable:
    """Equal-width left edges per feature and the 1-based bin of every cell."""
    x = np.asarray(x, dtype=np.int64)
    n, d = x.shape
    cmin = x.min(axis=0)
    delta = (x.max(axis=0) - cmin) // bins
    edges = np.empty((d, bins + 1), dtype=np.int64)
    edges[:, 0] = T_DUM
    edges[:, 1:] = cmin[:, None] + np.arange(bins, dtype=np.int64)[None, :] * delta[:, None]
    bin_id = np.empty((n, d), dtype=np.int64)
    for f in range(d):
        bin_id[:, f] = np.searchsorted(edges[f, 1:], x[:, f], side="right")
    return BinTable(edges, bin_id)


def base_logit(y: np.ndarray, hp: Hyperparams) -> int:
    cfg = hp.cfg
    y = np.asarray(y, dtype=np.int64)
    p = fxp.fxp_div(int(y.sum()) * cfg.scale, y.shape[0] * cfg.scale, cfg)
    return fxp.logit_from_prob(fxp.clip(p, hp.p_min, hp.p_max), cfg)


def grad_hess(z: np.ndarray, y: np.ndarray, cfg: FxpConfig) -> tuple[np.ndarray, np.ndarray]:
    p = fxp.sigmoid_arr(z, cfg)
    g = p - np.asarray(y, dtype=np.int64) * cfg.scale
    h = (p * (cfg.scale - p)) >> cfg.frac_bits
    return g, h


def node_histograms(g, h, bin_id, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-(feature, bin) sums of g and h, shape (d, B+1); column 0 unused."""
    n, d = bin_id.shape
    flat = (np.arange(d)[None, :] * (bins + 1) + bin_id).ravel()
    hg = np.zeros(d * (bins + 1), dtype=np.int64)
    hh = np.zeros(d * (bins + 1), dtype=np.int64)
    np.add.at(hg, flat, np.repeat(np.asarray(g, dtype=np.int64), d))
    np.add.at(hh, flat, np.repeat(np.asarray(h, dtype=np.int64), d))
    return hg.reshape(d, bins + 1), hh.reshape(d, bins + 1)


def check_sq_bound(values: np.ndarray, where: str) -> None:
    if values.size and int(np.abs(values).max()) > G_SQ_LIMIT:
        raise BoundViolation(f"gradient sum exceeds sqrt(p/2) at {where}")


def split_gains(hist_g: np.ndarray, hist_h: np.ndarray, hp: Hyperparams) -> np.ndarray:
    """Gain of every candidate (f, b), shape (d, B); column j is b = j + 1.

    The left side of candidate b holds bins strictly below b, matching the
    routing rule ``x < t`` with ``t = edges[f][b]``.
    """
    cg = np.cumsum(hist_g[:, 1:], axis=1)
    ch = np.cumsum(hist_h[:, 1:], axis=1)
    G = cg[:, -1:]
    H = ch[:, -1:]
    GL = np.concatenate([np.zeros_like(G), cg[:, :-1]], axis=1)
    HL = np.concatenate([np.zeros_like(H), ch[:, :-1]], axis=1)
    GR = G - GL
    HR = H - HL
    check_sq_bound(np.concatenate([GL, GR, G], axis=1), "split candidate")
    lam = hp.lam
    score = GL * GL // (HL + lam) + GR * GR // (HR + lam) - G * G // (H + lam)
    return fxp.tdiv_arr(score, 2) - hp.gamma


def argmax_split(gains: np.ndarray) -> tuple[int, int, int]:
    """First maximum in (feature, bin) lexicographic order; b is 1-based."""
    idx = int(np.argmax(gains))
    f, j = divmod(idx, gains.shape[1])
    return f, j + 1, int(gains[f, j])


def find_split(g, h, bin_id, hp: Hyperparams) -> tuple[int, int, int]:
    hist_g, hist_h = node_histograms(g, h, bin_id, hp.bins)
    return argmax_split(split_gains(hist_g, hist_h, hp))


def leaf_weight(G: int, H: int, hp: Hyperparams) -> int:
    if abs(G) > leaf_g_limit(hp.cfg):
        raise BoundViolation("leaf gradient sum exceeds p/(2S)")
    S = hp.cfg.scale
    return fxp.clip(fxp.fxp_div(G, H + hp.lam, hp.cfg), -S, S)


def path_nodes(leaf: np.ndarray, depth: int) -> np.ndarray:
    """Heap ids of the root-to-leaf path, shape (len(leaf), depth)."""
    heap = np.asarray(leaf, dtype=np.int64) + (1 << depth) - 1
    shifts = np.arange(depth, 0, -1)
    return heap[:, None] >> shifts[None, :]


# -- trainer ------------------------------------------------------------------------


def build_tree(g, h, bins: BinTable, hp: Hyperparams) -> Tree:
    n_leaves = hp.n_leaves
    f_arr = np.empty(n_leaves - 1, dtype=np.int64)
    t_arr = np.empty(n_leaves - 1, dtype=np.int64)
    w_arr = np.empty(n_leaves, dtype=np.int64)
    members: dict[int, np.ndarray] = {1: np.arange(bins.bin_id.shape[0])}
    for node in range(1, n_leaves):
        idx = members.pop(node)
        sub = bins.bin_id[idx]
        f, b, gain = find_split(g[idx], h[idx], sub, hp)
        if gain <= 0:
            f, b = F_DUM, B_DUM
        f_arr[node - 1] = f
        t_arr[node - 1] = bins.edges[f, b]
        go_left = sub[:, f] < b
        members[2 * node] = idx[go_left]
        members[2 * node + 1] = idx[~go_left]
    for leaf in range(1, n_leaves + 1):
        idx = members.pop(leaf + n_leaves - 1)
        w_arr[leaf - 1] = leaf_weight(int(g[idx].sum()), int(h[idx].sum()), hp)
    return Tree(f_arr, t_arr, w_arr)


def train(ds: Dataset, hp: Hyperparams) -> tuple[Model, LeafAssignment]:
    if ds.cfg != hp.cfg:
        raise ValueError("dataset and hyperparameters use different fixed-point configs")
    ds.validate()
    hp.validate()
    bins = prebin(ds.x, hp.bins)
    z0 = base_logit(ds.y, hp)
    z = np.full(ds.n, z0, dtype=np.int64)
    trees, leaves, scores = [], [], [z]
    for _ in range(hp.trees):
        g, h = grad_hess(z, ds.y, hp.cfg)
        tree = build_tree(g, h, bins, hp)
        leaf = tree.apply(ds.x)
        z = z - fxp.mul_arr(hp.eta, tree.w[leaf - 1], hp.cfg)
        trees.append(tree)
        leaves.append(leaf)
        scores.append(z)
    return Model(trees, z0, hp), LeafAssignment(np.array(leaves), np.array(scores))


def with_tree(model: Model, k: int, tree: Tree) -> Model:
    trees = list(model.trees)
    trees[k] = tree
    return replace(model, trees=trees)
