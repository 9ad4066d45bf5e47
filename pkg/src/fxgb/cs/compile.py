"""Lower the certification of a trained model into a constraint transcript.

The resulting constraint *structure* depends only on public parameters
(shape of the data, hyperparameters, fixed-point config); the witness values
depend on the dataset and model. :func:`structure_digest` hashes the
structure, so a verifier can rebuild the expected circuit from public data
and compare.

Two pieces replace private-memory arguments: the leaf a sample reaches is
derived from one-hot routing indicators over every internal node, and each
histogram cell is an explicit sum of indicator products. A transcript built
this way is flagged in its metadata.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..errors import BoundViolation
from ..field import P, GadgetParams
from ..fxp import RANGE_MAX
from ..train import F_DUM, G_SQ_LIMIT, T_DUM, Dataset, LeafAssignment, Model, leaf_g_limit
from . import gadgets as gd
from .transcript import LIN, Transcript

# Features must leave headroom so that column ranges stay inside the gap.
X_BOUND = 1 << 57

DATA_LINEAR_SECTIONS = ("input", "prebin", "score", "grad", "hist")
SUBSTITUTIONS = ["routing-indicators-for-path-lookup", "indicator-products-for-histogram-writes"]


def _half_p_quotient(m_d: int) -> int:
    return (P // 2 - 1) // m_d


def public_meta(ds: Dataset, model: Model) -> dict:
    hp = model.hp
    return {
        "n": ds.n,
        "d": ds.d,
        "trees": hp.trees,
        "depth": hp.depth,
        "bins": hp.bins,
        "frac_bits": hp.cfg.frac_bits,
        "eta": hp.eta,
        "lam": hp.lam,
        "gamma": hp.gamma,
        "p_min": hp.p_min,
        "scores_supplied": False,
        "substitutions": SUBSTITUTIONS,
    }


def compile_cert(
    ds: Dataset,
    model: Model,
    leaf_assignment: LeafAssignment | None = None,
    statement: bytes = bytes(32),
    params: GadgetParams | None = None,
    strict: bool = True,
) -> Transcript:
    hp = model.hp
    cfg = hp.cfg
    S, F = cfg.scale, cfg.frac_bits
    n, d, m, N, B = ds.n, ds.d, hp.trees, hp.n_leaves, hp.bins
    if ds.cfg != cfg:
        raise ValueError("dataset and model use different fixed-point configs")
    if len(model.trees) != m or any(
        t.f.shape != (N - 1,) or t.t.shape != (N - 1,) or t.w.shape != (N,) for t in model.trees
    ):
        raise ValueError("model shape does not match its hyperparameters")
    if strict and ds.x.size and int(np.abs(ds.x).max()) > X_BOUND:
        raise BoundViolation("feature magnitude exceeds the compile bound 2^57")

    meta = public_meta(ds, model)
    meta["scores_supplied"] = leaf_assignment is not None
    tr = Transcript(params, F, statement, meta)
    tr.strict = strict
    one, zero = tr.const(1), tr.const(0)
    m_d_h = n * (S // 4) + hp.lam + 1
    m_q_h = _half_p_quotient(m_d_h)

    if leaf_assignment is not None:
        claimed = np.asarray(leaf_assignment.leaves, dtype=np.int64)
        scores = np.asarray(leaf_assignment.scores, dtype=np.int64)
        if claimed.shape != (m, n) or scores.shape != (m + 1, n):
            raise ValueError("leaf assignment shape does not match the model")
    else:
        claimed = np.array([t.apply(ds.x) for t in model.trees]).reshape(m, n)
        scores = None

    # -- inputs ---------------------------------------------------------------------
    with tr.section("input"):
        X = [[tr.new(int(v)) for v in row] for row in ds.x.tolist()]
        Y = [tr.new(int(v)) for v in ds.y.tolist()]
        for row in X:
            for xw in row:
                gd.g_range(tr, xw, -X_BOUND, X_BOUND)
        for yw in Y:
            tr.assert_mul(yw, tr.lin([(-1, yw)], 1), zero)

    # -- equal-width binning ----------------------------------------------------------
    edges: list[list[int]] = []  # edges[f][b] for b = 1..B at index b
    onehot: list[list[list[int]]] = [[None] * d for _ in range(n)]
    for f in range(d):
        col = ds.x[:, f].tolist()
        with tr.section("prebin_edges"):
            cmin = tr.new(min(col))
            cmax = tr.new(max(col))
        with tr.section("prebin"):
            acc_lo = acc_hi = None
            for i in range(n):
                tr.assert_equal(gd.g_compare(tr, X[i][f], cmin), 0)
                tr.assert_equal(gd.g_compare(tr, cmax, X[i][f]), 0)
                lo = tr.lin([(1, X[i][f]), (-1, cmin)])
                hi = tr.lin([(1, cmax), (-1, X[i][f])])
                acc_lo = lo if acc_lo is None else tr.mul(acc_lo, lo, hint=True)
                acc_hi = hi if acc_hi is None else tr.mul(acc_hi, hi, hint=True)
            tr.assert_equal(acc_lo, 0)
            tr.assert_equal(acc_hi, 0)
        with tr.section("prebin_edges"):
            width = tr.lin([(1, cmax), (-1, cmin)])
            delta = gd.g_division(tr, width, tr.const(B), m_d=B, m_q=_half_p_quotient(B))
            row = [None, cmin] + [tr.lin([(1, cmin), (b - 1, delta)]) for b in range(2, B + 1)]
            edges.append(row)
        with tr.section("prebin"):
            for i in range(n):
                # a_b = 1{edge_b <= x}; a_1 = 1 because x >= cmin is proven above.
                a = [None, one] + [
                    tr.lin([(-1, gd.g_compare(tr, X[i][f], row[b]))], 1) for b in range(2, B + 1)
                ]
                a.append(zero)
                onehot[i][f] = [None] + [tr.lin([(1, a[b]), (-1, a[b + 1])]) for b in range(1, B + 1)]

    # -- base logit -----------------------------------------------------------------
    with tr.section("logit"):
        num = tr.lin([(S, yw) for yw in Y])
        prob = gd.g_division(tr, num, tr.const(n), m_d=n, m_q=S + 1)
        prob = gd.g_clip(tr, prob, hp.p_min, hp.p_max)
        u = tr.lin([(2, prob)], -S)
        u2 = gd.g_truncation(tr, tr.mul(u, u), F)
        u3 = gd.g_truncation(tr, tr.mul(u2, u), F)
        u5 = gd.g_truncation(tr, tr.mul(u3, u2), F)
        q3 = gd.g_division(tr, u3, tr.const(3), m_d=3, m_q=S + 1)
        q5 = gd.g_division(tr, u5, tr.const(5), m_d=5, m_q=S + 1)
        z0c = tr.lin([(2, u), (2, q3), (2, q5)])
    with tr.section("model"):
        z0 = tr.new(model.z0)
        tr.assert_lin([(1, z0), (-1, z0c)])

    z_prev = [z0] * n
    for k, tree in enumerate(model.trees):
        # -- committed tree parameters ------------------------------------------------
        with tr.section("model"):
            phi, T = [None], [None]
            for node in range(1, N):
                fv = int(tree.f[node - 1])
                fw = tr.new(fv)
                bits = [tr.new(1 if fv == j else 0) for j in range(d)]
                for bw in bits:
                    gd.g_bool(tr, bw)
                tr.assert_lin([(1, bw) for bw in bits], -1)
                tr.assert_lin([(1, fw)] + [(-j, bw) for j, bw in enumerate(bits)])
                phi.append((fw, bits))
                tw = tr.new(int(tree.t[node - 1]))
                gd.g_range(tr, tw, -RANGE_MAX, RANGE_MAX)
                T.append(tw)
            W = [tr.new(int(v)) for v in tree.w.tolist()]

        # -- gradients from the previous scores -----------------------------------------
        g_w, h_w = [], []
        with tr.section("grad"):
            for i in range(n):
                zp = z_prev[i]
                low = gd.g_compare(tr, zp, tr.const(-2 * S + 1))
                high = tr.lin([(-1, gd.g_compare(tr, zp, tr.const(2 * S)))], 1)
                mid = gd.g_truncation(tr, tr.lin([(1, zp)], 2 * S), 2)
                pm = tr.mul(tr.lin([(-1, low), (-1, high)], 1), mid)
                prob = tr.lin([(1, pm), (S, high)])
                g_w.append(tr.lin([(1, prob), (-S, Y[i])]))
                h_w.append(gd.g_truncation(tr, tr.mul(prob, tr.lin([(-1, prob)], S)), F))

        # -- routing, leaf claim, score update --------------------------------------------
        lam_ind = []
        z_next = []
        with tr.section("score"):
            for i in range(n):
                rho = [None, one] + [None] * (2 * N - 2)
                for node in range(1, N):
                    xsel = gd.g_dot(tr, phi[node][1], X[i])
                    left = gd.g_compare(tr, xsel, T[node])  # 1{x < t}
                    rho[2 * node] = left if node == 1 else tr.mul(rho[node], left)
                    rho[2 * node + 1] = tr.lin([(1, rho[node]), (-1, rho[2 * node])])
                ind = rho[N:]
                lam_ind.append(ind)
                lw = tr.new(int(claimed[k, i]))
                tr.assert_lin([(1, lw)] + [(-(l + 1), iw) for l, iw in enumerate(ind)])
                wsel = gd.g_dot(tr, ind, W)
                step = gd.g_truncation(tr, tr.lin([(hp.eta, wsel)]), F)
                zk = tr.lin([(1, z_prev[i]), (-1, step)])
                if scores is not None:
                    sw = tr.new(int(scores[k + 1, i]))
                    tr.assert_lin([(1, sw), (-1, zk)])
                z_next.append(zk)

        # -- histograms -------------------------------------------------------------
        with tr.section("hist"):
            cells_g = [[[[] for _ in range(B + 1)] for _ in range(N)] for _ in range(d)]
            cells_h = [[[[] for _ in range(B + 1)] for _ in range(N)] for _ in range(d)]
            for i in range(n):
                for l in range(N):
                    cg = tr.mul(lam_ind[i][l], g_w[i])
                    ch = tr.mul(lam_ind[i][l], h_w[i])
                    for f in range(d):
                        for b in range(1, B + 1):
                            cells_g[f][l][b].append(tr.mul(cg, onehot[i][f][b]))
                            cells_h[f][l][b].append(tr.mul(ch, onehot[i][f][b]))
        with tr.section("hist_tree"):
            HG = [[None] * (2 * N) for _ in range(d)]
            HH = [[None] * (2 * N) for _ in range(d)]
            for f in range(d):
                for l in range(N):
                    HG[f][l + N] = [None] + [tr.lin([(1, c) for c in cells_g[f][l][b]]) for b in range(1, B + 1)]
                    HH[f][l + N] = [None] + [tr.lin([(1, c) for c in cells_h[f][l][b]]) for b in range(1, B + 1)]
                for node in range(N - 1, 0, -1):
                    HG[f][node] = [None] + [
                        tr.lin([(1, HG[f][2 * node][b]), (1, HG[f][2 * node + 1][b])]) for b in range(1, B + 1)
                    ]
                    HH[f][node] = [None] + [
                        tr.lin([(1, HH[f][2 * node][b]), (1, HH[f][2 * node + 1][b])]) for b in range(1, B + 1)
                    ]

        # -- leaf weights -----------------------------------------------------------
        with tr.section("leaf"):
            limit = leaf_g_limit(cfg)
            for l in range(N):
                node = l + N
                G = tr.lin([(1, HG[0][node][b]) for b in range(1, B + 1)])
                H = tr.lin([(1, HH[0][node][b]) for b in range(1, B + 1)])
                gd.g_range(tr, G, -limit, limit)
                q = gd.g_division(tr, tr.lin([(S, G)]), tr.lin([(1, H)], hp.lam), m_d=m_d_h, m_q=m_q_h)
                tr.assert_lin([(1, W[l]), (-1, gd.g_clip(tr, q, -S, S))])

        # -- split optimality ---------------------------------------------------------
        with tr.section("split"):
            terminal = [None] * N
            for node in range(1, N):
                G = tr.lin([(1, HG[0][node][b]) for b in range(1, B + 1)])
                H = tr.lin([(1, HH[0][node][b]) for b in range(1, B + 1)])
                gd.g_range(tr, G, -G_SQ_LIMIT, G_SQ_LIMIT)
                t_par = gd.g_division(tr, tr.mul(G, G), tr.lin([(1, H)], hp.lam), m_d=m_d_h, m_q=m_q_h)
                gains, cell_edges, cell_f = [], [], []
                for f in range(d):
                    gl_terms, hl_terms = [], []
                    for b in range(1, B + 1):
                        GL = tr.lin(gl_terms)
                        HL = tr.lin(hl_terms)
                        GR = tr.lin([(1, G), (-1, GL)])
                        HR = tr.lin([(1, H), (-1, HL)])
                        gd.g_range(tr, GL, -G_SQ_LIMIT, G_SQ_LIMIT)
                        gd.g_range(tr, GR, -G_SQ_LIMIT, G_SQ_LIMIT)
                        t_l = gd.g_division(tr, tr.mul(GL, GL), tr.lin([(1, HL)], hp.lam), m_d=m_d_h, m_q=m_q_h)
                        t_r = gd.g_division(tr, tr.mul(GR, GR), tr.lin([(1, HR)], hp.lam), m_d=m_d_h, m_q=m_q_h)
                        half = gd.g_truncation(tr, tr.lin([(1, t_l), (1, t_r), (-1, t_par)]), 1)
                        gains.append(tr.lin([(1, half)], -hp.gamma))
                        cell_edges.append(edges[f][b])
                        cell_f.append(f)
                        gl_terms.append((1, HG[f][node][b]))
                        hl_terms.append((1, HH[f][node][b]))
                _argmax_constraints(tr, node, gains, cell_edges, cell_f, phi, T, terminal, zero)

        z_prev = z_next
    return tr


def _argmax_constraints(tr, node, gains, cell_edges, cell_f, phi, T, terminal, zero) -> None:
    """Bind the node's split to the first maximum gain, or to the dummy."""
    vals = [_signed(tr.val(g)) for g in gains]
    best = max(range(len(vals)), key=lambda c: (vals[c], -c))
    psi = [tr.new(1 if c == best else 0) for c in range(len(gains))]
    for pw in psi:
        gd.g_bool(tr, pw)
    tr.assert_lin([(1, pw) for pw in psi], -1)
    g_star = gd.g_dot(tr, psi, gains)
    f_star = tr.lin([(f, pw) for f, pw in zip(cell_f, psi) if f])
    t_star = gd.g_dot(tr, psi, cell_edges)
    prefix = []
    for c, gain in enumerate(gains):
        tr.assert_equal(gd.g_compare(tr, g_star, gain), 0)
        prefix.append((1, psi[c]))
        # Cells before the selected one must be strictly worse.
        seen = tr.lin(prefix)
        below = gd.g_compare(tr, gain, g_star)
        tr.assert_mul(tr.lin([(-1, seen)], 1), tr.lin([(-1, below)], 1), zero)
    no_gain = tr.lin([(-1, gd.g_compare(tr, tr.const(0), g_star))], 1)
    e = no_gain if node == 1 else gd.g_or(tr, no_gain, terminal[node // 2])
    terminal[node] = e
    # (f, t) = (1 - e) (f*, t*) + e (F_DUM, T_DUM)
    keep = tr.lin([(-1, e)], 1)
    tr.assert_lin([(1, phi[node][0]), (-1, tr.mul(keep, f_star)), (-F_DUM, e)])
    tr.assert_lin([(1, T[node]), (-1, tr.mul(keep, t_star)), (-T_DUM, e)])


def _signed(v: int) -> int:
    return v - P if v > P // 2 else v


def structure_digest(tr: Transcript) -> str:
    """Hash of the constraint system with witness values left out."""
    h = hashlib.sha256()
    h.update(repr((tr.params, tr.frac_bits, tr.sections, len(tr.values))).encode())
    for c in tr.constraints:
        if c[0] == LIN:
            h.update(repr((c[0], c[1], c[2], c[3])).encode())
        else:
            h.update(repr(c).encode())
    h.update(repr(sorted(tr.tables)).encode())
    return h.hexdigest()


def template_transcript(meta: dict) -> Transcript:
    """Compile a placeholder witness with the public shape recorded in ``meta``."""
    from ..fxp import FxpConfig
    from ..train import Hyperparams, Tree

    cfg = FxpConfig(meta["frac_bits"])
    hp = Hyperparams(meta["trees"], meta["depth"], meta["bins"], meta["eta"], meta["lam"], meta["gamma"], meta["p_min"], cfg)
    n, d, N = meta["n"], meta["d"], hp.n_leaves
    ds = Dataset(np.zeros((n, d), dtype=np.int64), np.zeros(n, dtype=np.int64), cfg)
    trees = [Tree(np.zeros(N - 1), np.full(N - 1, T_DUM), np.zeros(N)) for _ in range(hp.trees)]
    model = Model(trees, 0, hp)
    la = None
    if meta.get("scores_supplied"):
        la = LeafAssignment(np.ones((hp.trees, n), dtype=np.int64), np.zeros((hp.trees + 1, n), dtype=np.int64))
    return compile_cert(ds, model, la, strict=False)


def data_linear_count(tr: Transcript) -> int:
    counts = tr.counts_by_section()
    return sum(counts.get(s, 0) for s in DATA_LINEAR_SECTIONS)
