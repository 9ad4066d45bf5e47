"""JSON documents and canonical binary encodings for datasets and models.

JSON carries raw fixed-point integers as decimal strings. The binary forms
are little-endian with a fixed field order and are what commitments hash.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import FormatError
from .fxp import FxpConfig
from .train import Dataset, Hyperparams, LeafAssignment, Model, Tree

MODEL_FORMAT = "fxgb-model/1"
LEAVES_FORMAT = "fxgb-leaves/1"
FOREST_FORMAT = "fxgb-forest/1"


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _strs(a) -> list[str]:
    return [str(int(v)) for v in np.asarray(a).tolist()]


def _ints(values, what: str) -> np.ndarray:
    try:
        return np.array([int(v) for v in values], dtype=np.int64)
    except (TypeError, ValueError):
        raise FormatError(f"malformed integer list in {what}") from None


def hyperparams_to_json(hp: Hyperparams) -> dict:
    return {
        "trees": hp.trees,
        "depth": hp.depth,
        "bins": hp.bins,
        "eta": str(hp.eta),
        "lambda": str(hp.lam),
        "gamma": str(hp.gamma),
        "p_min": str(hp.p_min),
    }


def hyperparams_from_json(doc: dict, cfg: FxpConfig) -> Hyperparams:
    return Hyperparams(
        int(doc["trees"]),
        int(doc["depth"]),
        int(doc["bins"]),
        int(doc["eta"]),
        int(doc["lambda"]),
        int(doc["gamma"]),
        int(doc["p_min"]),
        cfg,
    )


def model_to_json(model: Model) -> str:
    return _dump(
        {
            "format": MODEL_FORMAT,
            "frac_bits": model.cfg.frac_bits,
            "hyperparams": hyperparams_to_json(model.hp),
            "z0": str(model.z0),
            "trees": [{"f": [int(v) for v in t.f.tolist()], "t": _strs(t.t), "w": _strs(t.w)} for t in model.trees],
        }
    )


def model_from_json(text: str) -> Model:
    try:
        doc = json.loads(text)
        if doc.get("format") != MODEL_FORMAT:
            raise FormatError(f"not a model document (format={doc.get('format')!r})")
        cfg = FxpConfig(int(doc["frac_bits"]))
        hp = hyperparams_from_json(doc["hyperparams"], cfg)
        trees = [
            Tree(_ints(t["f"], "f"), _ints(t["t"], "t"), _ints(t["w"], "w")) for t in doc["trees"]
        ]
        return Model(trees, int(doc["z0"]), hp)
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed model document: {exc}") from None


def leaves_to_json(la: LeafAssignment) -> str:
    return _dump(
        {
            "format": LEAVES_FORMAT,
            "leaves": np.asarray(la.leaves).tolist(),
            "scores": [_strs(row) for row in la.scores],
        }
    )


def leaves_from_json(text: str) -> LeafAssignment:
    try:
        doc = json.loads(text)
        if doc.get("format") != LEAVES_FORMAT:
            raise FormatError("not a leaf-assignment document")
        leaves = np.array(doc["leaves"], dtype=np.int64)
        scores = np.array([[int(v) for v in row] for row in doc["scores"]], dtype=np.int64)
        return LeafAssignment(leaves, scores)
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed leaf-assignment document: {exc}") from None


# -- canonical binary -------------------------------------------------------------------


def dataset_bytes(ds: Dataset) -> bytes:
    head = b"FXDS" + struct.pack("<BQQ", ds.cfg.frac_bits, ds.n, ds.d)
    return head + ds.x.astype("<i8").tobytes() + ds.y.astype("<i8").tobytes()


def model_bytes(model: Model) -> bytes:
    hp = model.hp
    out = [
        b"FXMD",
        struct.pack("<BIBH", hp.cfg.frac_bits, hp.trees, hp.depth, hp.bins),
        struct.pack("<qqqqq", hp.eta, hp.lam, hp.gamma, hp.p_min, model.z0),
        struct.pack("<I", len(model.trees)),
    ]
    for t in model.trees:
        out += [t.f.astype("<i8").tobytes(), t.t.astype("<i8").tobytes(), t.w.astype("<i8").tobytes()]
    return b"".join(out)


def forest_to_json(model, spec) -> str:
    return _dump(
        {
            "format": FOREST_FORMAT,
            "frac_bits": model.cfg.frac_bits,
            "params": {"trees": model.params.trees, "depth": model.params.depth, "bins": model.params.bins},
            "seed": spec.seed,
            "index_sets": [s.tolist() for s in spec.index_sets],
            "index_digests": model.index_digests,
            "trees": [{"f": [int(v) for v in t.f.tolist()], "t": _strs(t.t), "w": _strs(t.w)} for t in model.trees],
        }
    )


def forest_from_json(text: str):
    from .forest import ForestModel, ForestParams, ForestSpec

    try:
        doc = json.loads(text)
        if doc.get("format") != FOREST_FORMAT:
            raise FormatError("not a forest document")
        params = ForestParams(**{k: int(v) for k, v in doc["params"].items()})
        cfg = FxpConfig(int(doc["frac_bits"]))
        spec = ForestSpec([np.array(s, dtype=np.int64) for s in doc["index_sets"]], params, int(doc["seed"]))
        trees = [Tree(_ints(t["f"], "f"), _ints(t["t"], "t"), _ints(t["w"], "w")) for t in doc["trees"]]
        return ForestModel(trees, params, cfg, list(doc["index_digests"])), spec
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed forest document: {exc}") from None
