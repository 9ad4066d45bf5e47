"""Dataset ingestion and the bundled synthetic benchmark."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import fxp
from .errors import DatasetError
from .fxp import FxpConfig
from .train import Dataset


def make_gaussians(n: int = 1000, d: int = 8, seed: int = 0, separation: float = 1.0):
    """Two isotropic Gaussian classes whose means differ by ``separation`` per axis.

    Returns ``(x, y)`` as float features and int labels.
    """
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    shift = separation * (2 * y[:, None] - 1) / 2.0
    x = rng.normal(size=(n, d)) + shift * np.linspace(1.0, 0.25, d)[None, :]
    return x, y.astype(np.int64)


def train_test_split(n: int, test_fraction: float = 0.3, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    n_test = int(round(n * test_fraction))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def quantize_matrix(x, cfg: FxpConfig) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.array([fxp.quantize(float(v), cfg) for v in x.ravel()], dtype=np.int64).reshape(x.shape)


def read_csv(path: str | Path, label_col: str = "label") -> tuple[list[str], np.ndarray, list[list[str]]]:
    """Parse a headered CSV into (feature names, label array, raw text cells).

    Cells are returned as text so quantization can go through ``Decimal`` and
    stay independent of float formatting.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DatasetError(f"{path}: empty CSV")
    header = [h.strip() for h in rows[0]]
    if label_col not in header:
        raise DatasetError(f"{path}: no label column {label_col!r} in header")
    if len(rows) < 2:
        raise DatasetError(f"{path}: no data rows")
    li = header.index(label_col)
    names = [h for j, h in enumerate(header) if j != li]
    if not names:
        raise DatasetError(f"{path}: no feature columns")
    labels, cells = [], []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        try:
            labels.append(int(row[li].strip()))
        except ValueError:
            raise DatasetError(f"{path}: row {r}, column {label_col!r}: label {row[li]!r} is not an integer") from None
        cells.append([c.strip() for j, c in enumerate(row) if j != li])
    return names, np.array(labels, dtype=np.int64), cells


def ingest_csv(path: str | Path, frac_bits: int = fxp.DEFAULT_FRAC_BITS, label_col: str = "label") -> Dataset:
    cfg = FxpConfig(frac_bits)
    names, y, cells = read_csv(path, label_col)
    x = np.empty((len(cells), len(names)), dtype=np.int64)
    for i, row in enumerate(cells):
        for j, cell in enumerate(row):
            try:
                x[i, j] = fxp.quantize(cell, cfg)
            except (ArithmeticError, ValueError) as exc:
                raise DatasetError(f"{path}: row {i + 2}, column {names[j]!r}: cannot quantize {cell!r} ({exc})") from None
    return Dataset(x, y, cfg).validate()


def write_csv(path: str | Path, x, y, label_col: str = "label", names=None) -> None:
    x = np.asarray(x)
    names = names or [f"x{j}" for j in range(x.shape[1])]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*names, label_col])
        for row, label in zip(x.tolist(), np.asarray(y).tolist()):
            w.writerow([*(repr(float(v)) for v in row), int(label)])


def breast_cancer():
    """The UCI Wisconsin diagnostic data as shipped with scikit-learn (no download)."""
    from sklearn.datasets import load_breast_cancer

    data = load_breast_cancer()
    return data.data, data.target.astype(np.int64)
