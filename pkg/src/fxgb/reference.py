"""Independent oracles and a double-precision mirror trainer.

Nothing here imports the rest of the package. The integer oracles evaluate
the defining formulas with exact rationals and record a derivation trace;
they mint the golden files under ``tests/testdata``. The float trainer runs
the same control flow as the fixed-point trainer with the same piecewise
sigmoid and Taylor log-odds, so the two differ only by rounding.

Regenerate the golden files with::

    python -m fxgb.reference golden tests/testdata
"""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

GENERATOR_VERSION = "fxgb-reference/1"
_P = 2**61 - 1
_RANGE_MAX = _P // 4


def _trunc(q: Fraction) -> int:
    """Round a rational toward zero."""
    mag = abs(q.numerator) // q.denominator
    return mag if q >= 0 else -mag


@dataclass
class OracleCase:
    op: str
    inputs: dict
    expected: object
    trace: list

    def to_json(self) -> dict:
        return {
            "op": self.op,
            "inputs": self.inputs,
            "expected": self.expected,
            "trace": self.trace,
            "generator_version": GENERATOR_VERSION,
        }


def oracle_fxp(op: str, inputs: dict, F: int) -> OracleCase:
    """Evaluate one fixed-point operation from its definition."""
    S = 2**F
    trace: list[str] = []
    if op == "quantize":
        real = Fraction(str(inputs["real"]))
        out = _trunc(real * S)
        trace.append(f"trunc({real} * {S}) = {out}")
    elif op == "mul":
        x, y = int(inputs["x"]), int(inputs["y"])
        out = _trunc(Fraction(x * y, S))
        trace.append(f"trunc({x}*{y}/{S}) = {out}")
    elif op == "div":
        x, y = int(inputs["x"]), int(inputs["y"])
        mag = (abs(x) * S) // abs(y)
        out = -mag if (x < 0) != (y < 0) else mag
        trace.append(f"floor(|{x}|*{S}/|{y}|) = {mag}; sign -> {out}")
    elif op == "sigmoid":
        z = int(inputs["z"])
        if z <= -2 * S:
            out = 0
        elif z >= 2 * S:
            out = S
        else:
            out = (z + 2 * S) // 4
        trace.append(f"piecewise({z}) = {out}")
    elif op == "logit":
        p = int(inputs["p"])
        u = 2 * p - S
        u2 = _trunc(Fraction(u * u, S))
        u3 = _trunc(Fraction(u2 * u, S))
        u5 = _trunc(Fraction(u3 * u2, S))
        q3 = _trunc(Fraction(u3, 3))
        q5 = _trunc(Fraction(u5, 5))
        out = 2 * (u + q3 + q5)
        trace += [f"u={u}", f"u2={u2}", f"u3={u3}", f"u5={u5}", f"u3/3={q3}", f"u5/5={q5}", f"2*(u+u3/3+u5/5)={out}"]
    elif op == "clip":
        x, lo, hi = (int(inputs[k]) for k in ("x", "lo", "hi"))
        out = min(max(x, lo), hi)
        trace.append(f"min(max({x},{lo}),{hi}) = {out}")
    elif op == "msb":
        v = int(inputs["v"]) % _P
        out = (v >> 60) & 1
        trace.append(f"bit60({v}) = {out}")
    elif op == "base_logit":
        y = [int(v) for v in inputs["y"]]
        p_min = int(inputs["p_min"])
        p = (sum(y) * S * S) // (len(y) * S)
        pc = min(max(p, p_min), S - p_min)
        trace.append(f"p={p} clipped={pc}")
        sub = oracle_fxp("logit", {"p": pc}, F)
        trace += sub.trace
        out = sub.expected
    else:
        raise ValueError(f"unknown oracle op {op!r}")
    return OracleCase(op, {**inputs, "F": F}, out, trace)


def oracle_split(g, h, bin_id, bins: int, lam: int, gamma: int) -> dict:
    """Brute-force gain of every (f, b) on one node plus the first argmax.

    ``bin_id`` is a list of per-sample lists of 1-based bins. Features are
    0-based; the left side of candidate b is every sample with bin < b.
    """
    n = len(g)
    d = len(bin_id[0]) if n else 0
    G, H = sum(g), sum(h)
    table: dict[str, int] = {}
    best = None
    for f in range(d):
        for b in range(1, bins + 1):
            left = [i for i in range(n) if bin_id[i][f] < b]
            gl = sum(g[i] for i in left)
            hl = sum(h[i] for i in left)
            gr, hr = G - gl, H - hl
            s = gl * gl // (hl + lam) + gr * gr // (hr + lam) - G * G // (H + lam)
            gain = _trunc(Fraction(s, 2)) - gamma
            table[f"{f},{b}"] = gain
            if best is None or gain > best[2]:
                best = (f, b, gain)
    if best is None:  # d == 0 never happens for valid data; keep the shape total
        best = (0, 1, -gamma)
    return {"gains": table, "argmax": list(best)}


def oracle_recount(bin_id, g, h, f, t, x, depth: int, bins: int):
    """Per-node histograms recomputed by filtering samples on path predicates.

    Returns ``(G, H)`` as nested lists indexed ``[feature][heap node][bin]``
    with heap nodes 1..2N-1 and bins 1..B (index 0 unused in both axes).
    """
    n = len(g)
    d = len(x[0]) if n else 0
    n_nodes = 2 ** (depth + 1)
    G = [[[0] * (bins + 1) for _ in range(n_nodes)] for _ in range(d)]
    H = [[[0] * (bins + 1) for _ in range(n_nodes)] for _ in range(d)]
    for node in range(1, n_nodes):
        # Leaf-to-root chain of (ancestor, went_right) constraints for node.
        chain = []
        cur = node
        while cur > 1:
            chain.append((cur // 2, cur % 2 == 1))
            cur //= 2
        for i in range(n):
            if all((t[a - 1] <= x[i][f[a - 1]]) == right for a, right in chain):
                for ff in range(d):
                    G[ff][node][bin_id[i][ff]] += g[i]
                    H[ff][node][bin_id[i][ff]] += h[i]
    return G, H


# -- float mirror -------------------------------------------------------------------


def sigmoid_float(z):
    z = np.asarray(z, dtype=float)
    return np.where(z <= -2.0, 0.0, np.where(z >= 2.0, 1.0, (z + 2.0) / 4.0))


def logit_float(p: float) -> float:
    u = 2.0 * p - 1.0
    return 2.0 * (u + u**3 / 3.0 + u**5 / 5.0)


@dataclass
class FloatTree:
    f: np.ndarray
    t: np.ndarray
    w: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        depth = self.w.shape[0].bit_length() - 1
        rows = np.arange(x.shape[0])
        node = np.ones(x.shape[0], dtype=np.int64)
        for _ in range(depth):
            node = 2 * node + (self.t[node - 1] <= x[rows, self.f[node - 1]])
        return node - (self.w.shape[0] - 1)


@dataclass
class FloatModel:
    trees: list
    z0: float
    eta: float

    def decision(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = np.full(x.shape[0], self.z0)
        for tree in self.trees:
            z = z - self.eta * tree.w[tree.apply(x) - 1]
        return z

    def predict(self, x) -> np.ndarray:
        return (self.decision(x) > 0).astype(np.int64)


def train_float_reference(
    x,
    y,
    trees: int,
    depth: int,
    bins: int,
    eta: float = 0.3,
    lam: float = 1.0,
    gamma: float = 0.0,
    p_min: float = 1e-6,
) -> FloatModel:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = x.shape
    cmin = x.min(axis=0)
    delta = (x.max(axis=0) - cmin) / bins
    edges = np.empty((d, bins + 1))
    edges[:, 0] = -np.inf
    edges[:, 1:] = cmin[:, None] + np.arange(bins)[None, :] * delta[:, None]
    bin_id = np.stack([np.searchsorted(edges[f, 1:], x[:, f], side="right") for f in range(d)], axis=1)

    p0 = min(max(y.mean(), p_min), 1.0 - p_min)
    z0 = logit_float(p0)
    z = np.full(n, z0)
    n_leaves = 2**depth
    out = []
    for _ in range(trees):
        p = sigmoid_float(z)
        g, h = p - y, p * (1.0 - p)
        f_arr = np.zeros(n_leaves - 1, dtype=np.int64)
        t_arr = np.zeros(n_leaves - 1)
        w_arr = np.zeros(n_leaves)
        members = {1: np.arange(n)}
        for node in range(1, n_leaves):
            idx = members.pop(node)
            sub = bin_id[idx]
            G, H = g[idx].sum(), h[idx].sum()
            best = (0, 0, -np.inf)
            for f in range(d):
                hg = np.bincount(sub[:, f], weights=g[idx], minlength=bins + 1)
                hh = np.bincount(sub[:, f], weights=h[idx], minlength=bins + 1)
                gl = np.concatenate([[0.0], np.cumsum(hg[1:])[:-1]])
                hl = np.concatenate([[0.0], np.cumsum(hh[1:])[:-1]])
                gain = 0.5 * (gl**2 / (hl + lam) + (G - gl) ** 2 / (H - hl + lam) - G**2 / (H + lam)) - gamma
                j = int(np.argmax(gain))
                if gain[j] > best[2]:
                    best = (f, j + 1, gain[j])
            f, b, gain = best
            if gain <= 0:
                f, b = 0, 0
            f_arr[node - 1] = f
            t_arr[node - 1] = edges[f, b]
            left = sub[:, f] < b
            members[2 * node] = idx[left]
            members[2 * node + 1] = idx[~left]
        for leaf in range(1, n_leaves + 1):
            idx = members.pop(leaf + n_leaves - 1)
            w_arr[leaf - 1] = np.clip(g[idx].sum() / (h[idx].sum() + lam), -1.0, 1.0)
        tree = FloatTree(f_arr, t_arr, w_arr)
        z = z - eta * w_arr[tree.apply(x) - 1]
        out.append(tree)
    return FloatModel(out, z0, eta)


# -- golden files -------------------------------------------------------------------


def _golden_fxp() -> list[dict]:
    cases = [
        oracle_fxp("div", {"x": 16, "y": 48}, 4),
        oracle_fxp("div", {"x": -16, "y": 48}, 4),
        oracle_fxp("mul", {"x": -24, "y": 32}, 4),
        oracle_fxp("logit", {"p": 786432}, 20),  # 0.75 at F=20
        oracle_fxp("logit", {"p": 2**20 - 1}, 20),  # p_max for p_min = 1 raw unit
        oracle_fxp("logit", {"p": 1}, 20),
        oracle_fxp("base_logit", {"y": [1] * 7, "p_min": 1}, 20),
        oracle_fxp("base_logit", {"y": [1, 0, 1, 1, 0, 1, 1], "p_min": 1}, 20),
    ]
    rng = np.random.default_rng(20240611)
    for _ in range(20):
        x = int(rng.integers(-(2**40), 2**40))
        y = int(rng.integers(1, 2**30)) * (1 if rng.random() < 0.5 else -1)
        cases.append(oracle_fxp("div", {"x": x, "y": y}, 20))
        cases.append(oracle_fxp("mul", {"x": x, "y": y}, 20))
    for _ in range(10):
        p = int(rng.integers(1, 2**20))
        cases.append(oracle_fxp("logit", {"p": p}, 20))
    return [c.to_json() for c in cases]


def _golden_split() -> list[dict]:
    rng = np.random.default_rng(7)
    out = []
    crafted = {
        "g": [-300, 200, -150, 250],
        "h": [60, 55, 40, 62],
        "bin_id": [[1, 4], [2, 1], [3, 3], [4, 2]],
        "bins": 4,
        "lam": 16,
        "gamma": 0,
    }
    cases = [crafted]
    for _ in range(12):
        n = int(rng.integers(1, 12))
        d = int(rng.integers(1, 4))
        bins = int(rng.integers(2, 7))
        cases.append(
            {
                "g": [int(v) for v in rng.integers(-(2**19), 2**19, n)],
                "h": [int(v) for v in rng.integers(0, 2**18, n)],
                "bin_id": [[int(v) for v in row] for row in rng.integers(1, bins + 1, (n, d))],
                "bins": bins,
                "lam": 2**20,
                "gamma": int(rng.integers(0, 2**10)),
            }
        )
    for c in cases:
        res = oracle_split(c["g"], c["h"], c["bin_id"], c["bins"], c["lam"], c["gamma"])
        trace = [f"left side of (f,b) = samples with bin < b; {len(res['gains'])} candidates scanned"]
        out.append(OracleCase("find_split", c, res, trace).to_json())
    return out


def write_golden(directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    header = {"generated_by": "python -m fxgb.reference golden " + str(directory), "generator_version": GENERATOR_VERSION}
    paths = []
    for name, cases in (("fxp_cases.json", _golden_fxp()), ("split_cases.json", _golden_split())):
        path = directory / name
        path.write_text(json.dumps({**header, "cases": cases}, indent=1) + "\n")
        paths.append(path)
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="python -m fxgb.reference")
    sub = parser.add_subparsers(dest="cmd", required=True)
    gold = sub.add_parser("golden", help="regenerate golden oracle files")
    gold.add_argument("directory", type=Path)
    args = parser.parse_args(argv)
    for path in write_golden(args.directory):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
