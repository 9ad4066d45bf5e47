"""Command-line interface.

Exit codes: 0 success or accept, 1 reject, 2 usage or I/O error. Every
option may also come from a ``key = value`` file given with ``--config``;
explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
import time
from pathlib import Path

import numpy as np

from . import commit as cm
from . import fxp
from .cert import certify
from .datasets import ingest_csv, make_gaussians, quantize_matrix, read_csv, train_test_split
from .errors import DatasetError, FormatError, FxgbError
from .fxp import FxpConfig
from .train import Dataset, Hyperparams, train

EXIT_OK, EXIT_REJECT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# name -> (type, default). A default of None means "required by the command that uses it".
OPTIONS = {
    "data": (Path, None),
    "model": (Path, None),
    "leaves": (Path, None),
    "label_col": (str, "label"),
    "trees": (int, 10),
    "depth": (int, 3),
    "bins": (int, 16),
    "eta": (str, "0.3"),
    "lambda": (str, "1"),
    "gamma": (str, "0"),
    "p_min": (str, "1e-6"),
    "frac_bits": (int, fxp.DEFAULT_FRAC_BITS),
    "seed": (int, None),
    "threads": (int, 1),
    "out": (Path, None),
    "transcript": (Path, None),
    "commitments": (Path, None),
    "openings": (Path, None),
    "report": (Path, None),
    "mutation": (str, None),
    "test_fraction": (float, 0.3),
    "tolerance": (float, 0.01),
    "challenges": (int, 1),
}

HELP = {
    "data": "CSV file with a header row",
    "model": "model JSON file",
    "leaves": "leaf-assignment JSON (default: <model>.leaves.json when present)",
    "label_col": "name of the label column",
    "trees": "number of trees",
    "depth": "tree depth",
    "bins": "bins per feature",
    "eta": "learning rate, decimal",
    "lambda": "L2 regularizer on leaf weights, decimal",
    "gamma": "minimum split gain, decimal, non-negative",
    "p_min": "probability floor for the base score, decimal",
    "frac_bits": "fractional bits of the fixed-point format (4..28)",
    "seed": "seed for every randomized step",
    "threads": "worker threads for per-tree certification",
    "out": "output file",
    "transcript": "transcript binary file",
    "commitments": "public commitments JSON (default: <transcript>.commit.json)",
    "openings": "commitment openings JSON (default: <transcript>.open.json)",
    "report": "write the JSON report here instead of stdout",
    "mutation": "mutation class: z0, feat, thresh, weight, dummy",
    "test_fraction": "held-out fraction for the parity split",
    "tolerance": "maximum accepted |acc_fixed - acc_float|",
    "challenges": "number of random batching challenges to verify under",
}

COMMANDS = {
    "train": ("train a fixed-point boosted model", ["data", "label_col", "trees", "depth", "bins", "eta", "lambda", "gamma", "p_min", "frac_bits", "out", "leaves"]),
    "certify": ("re-derive training and accept or reject a model", ["data", "label_col", "frac_bits", "model", "leaves", "threads", "report"]),
    "prove": ("commit and write a constraint transcript", ["data", "label_col", "frac_bits", "model", "leaves", "seed", "transcript", "commitments", "openings"]),
    "verify": ("replay a transcript against public commitments", ["transcript", "commitments", "seed", "challenges", "data", "label_col", "frac_bits", "model", "openings", "report"]),
    "mutate": ("write a single-field mutation of a model", ["data", "label_col", "frac_bits", "model", "mutation", "seed", "out"]),
    "parity": ("compare fixed-point and float accuracy", ["data", "label_col", "trees", "depth", "bins", "eta", "lambda", "gamma", "p_min", "frac_bits", "seed", "test_fraction", "tolerance", "report"]),
    "forest-train": ("train a Gini random forest on seeded subsamples", ["data", "label_col", "trees", "depth", "bins", "frac_bits", "seed", "out"]),
    "forest-certify": ("certify a forest model", ["data", "label_col", "frac_bits", "model", "report"]),
    "gadget-selftest": ("exercise the arithmetic gadgets", ["seed", "report"]),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fxgb", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, help="key = value file supplying option defaults")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (desc, opts) in COMMANDS.items():
        p = sub.add_parser(name, help=desc, description=desc)
        p.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="key = value defaults file")
        for opt in opts:
            typ, default = OPTIONS[opt]
            flag = "--" + opt.replace("_", "-")
            extra = f" (default: {default})" if default is not None else ""
            kwargs = {"choices": ["z0", "feat", "thresh", "weight", "dummy"]} if opt == "mutation" else {}
            p.add_argument(flag, dest=opt, type=typ, default=None, help=HELP[opt] + extra, **kwargs)
    return parser


def load_config(path: Path) -> dict:
    out = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown option {key!r}")
        out[key] = value
    return out


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    config = load_config(args.config) if getattr(args, "config", None) else {}
    for opt in COMMANDS[args.command][1]:
        if getattr(args, opt) is None:
            typ, default = OPTIONS[opt]
            setattr(args, opt, typ(config[opt]) if opt in config else default)
    return args


def need(args, *names) -> None:
    missing = ["--" + n.replace("_", "-") for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s) {', '.join(missing)}")


def emit(args, doc: dict) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if getattr(args, "report", None):
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)


def hyperparams(args) -> Hyperparams:
    cfg = FxpConfig(args.frac_bits)
    q = lambda v: fxp.quantize(v, cfg)  # noqa: E731
    hp = Hyperparams(args.trees, args.depth, args.bins, q(args.eta), q(args.lambda_), q(args.gamma), max(1, q(args.p_min)), cfg)
    try:
        return hp.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def dataset(args, frac_bits: int | None = None) -> Dataset:
    return ingest_csv(args.data, frac_bits if frac_bits is not None else args.frac_bits, args.label_col)


def _leaves_path(args) -> Path | None:
    if args.leaves is not None:
        return args.leaves
    guess = Path(str(args.model) + ".leaves.json") if args.model else None
    return guess if guess is not None and guess.exists() else None


def load_model_and_data(args):
    from .serialize import leaves_from_json, model_from_json

    model = model_from_json(Path(args.model).read_text())
    ds = dataset(args, model.cfg.frac_bits)
    lp = _leaves_path(args)
    la = leaves_from_json(lp.read_text()) if lp else None
    return model, ds, la


# -- commands ------------------------------------------------------------------------


def cmd_train(args) -> int:
    from .serialize import leaves_to_json, model_to_json

    need(args, "data", "out")
    args.lambda_ = getattr(args, "lambda")
    ds = dataset(args)
    model, la = train(ds, hyperparams(args))
    Path(args.out).write_text(model_to_json(model))
    leaves = args.leaves or Path(str(args.out) + ".leaves.json")
    Path(leaves).write_text(leaves_to_json(la))
    print(f"trained {len(model.trees)} trees on {ds.n} rows x {ds.d} features -> {args.out}, {leaves}")
    return EXIT_OK


def cmd_certify(args) -> int:
    need(args, "data", "model")
    model, ds, la = load_model_and_data(args)
    report = certify(ds, model, la, threads=max(1, args.threads))
    emit(args, report.to_json())
    return EXIT_OK if report.accepted else EXIT_REJECT


def _side_paths(args):
    commitments = args.commitments or Path(str(args.transcript) + ".commit.json")
    openings = args.openings or Path(str(args.transcript) + ".open.json")
    return commitments, openings


def cmd_prove(args) -> int:
    from .cs import compile_cert, dumps

    need(args, "data", "model", "seed", "transcript")
    model, ds, la = load_model_and_data(args)
    r_ds = cm.seeded_randomness(args.seed, "dataset")
    r_model = cm.seeded_randomness(args.seed, "model")
    c_ds, c_model = cm.commit_object(ds, r_ds), cm.commit_object(model, r_model)
    st = cm.statement(c_ds, c_model)
    if not certify(ds, model, la):
        print("warning: plaintext certification rejects this model; the transcript will not verify", file=sys.stderr)
    tr = compile_cert(ds, model, la, statement=st)
    Path(args.transcript).write_bytes(dumps(tr))
    commitments, openings = _side_paths(args)
    Path(commitments).write_text(
        json.dumps({"dataset": c_ds.hex, "model": c_model.hex, "statement": st.hex()}, indent=2, sort_keys=True) + "\n"
    )
    Path(openings).write_text(json.dumps({"dataset": r_ds.hex(), "model": r_model.hex()}, indent=2, sort_keys=True) + "\n")
    print(f"transcript: {tr.n_wires} wires, {len(tr.constraints)} constraints -> {args.transcript}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .cs import loads, structure_digest, template_transcript, verify_transcript

    need(args, "transcript")
    commitments, openings = _side_paths(args)
    pub = json.loads(Path(commitments).read_text())
    try:
        c_ds = cm.Commitment(bytes.fromhex(pub["dataset"]), cm.TAG_DATASET)
        c_model = cm.Commitment(bytes.fromhex(pub["model"]), cm.TAG_MODEL)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{commitments}: malformed commitments file ({exc})") from None
    data = Path(args.transcript).read_bytes()
    doc = {"accepted": False, "reason": ""}
    try:
        tr = loads(data)
    except FormatError as exc:
        doc["reason"] = f"unreadable transcript: {exc}"
        emit(args, doc)
        return EXIT_REJECT
    if args.data is not None and args.model is not None:
        from .serialize import model_from_json

        model = model_from_json(Path(args.model).read_text())
        ds = dataset(args, model.cfg.frac_bits)
        rnd = json.loads(Path(openings).read_text())
        if not (
            cm.verify_open(c_ds, cm.canonical_bytes(ds), bytes.fromhex(rnd["dataset"]))
            and cm.verify_open(c_model, cm.canonical_bytes(model), bytes.fromhex(rnd["model"]))
        ):
            doc["reason"] = "commitment opening mismatch"
            emit(args, doc)
            return EXIT_REJECT
    try:
        expected = structure_digest(template_transcript(tr.meta))
    except (KeyError, TypeError, ValueError) as exc:
        doc["reason"] = f"transcript metadata does not describe a circuit: {exc}"
        emit(args, doc)
        return EXIT_REJECT
    if structure_digest(tr) != expected:
        doc["reason"] = "constraint structure differs from the public circuit"
        emit(args, doc)
        return EXIT_REJECT
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    for _ in range(max(1, args.challenges)):
        chi = int(rng.integers(1, fxp.P)) if rng is not None else 1 + secrets.randbelow(fxp.P - 1)
        res = verify_transcript(tr, chi, expected_statement=cm.statement(c_ds, c_model))
        if not res:
            doc.update(reason=res.reason, constraint=res.constraint)
            emit(args, doc)
            return EXIT_REJECT
    doc.update(accepted=True, wires=tr.n_wires, constraints=len(tr.constraints))
    emit(args, doc)
    return EXIT_OK


def cmd_mutate(args) -> int:
    from .mutate import mutate_model
    from .serialize import model_from_json, model_to_json

    need(args, "data", "model", "mutation", "seed", "out")
    model = model_from_json(Path(args.model).read_text())
    ds = dataset(args, model.cfg.frac_bits)
    try:
        mutated = mutate_model(model, ds.x, args.mutation, np.random.default_rng(args.seed))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    Path(args.out).write_text(model_to_json(mutated))
    print(f"{args.mutation} mutation -> {args.out}")
    return EXIT_OK


def _real_matrix(cells) -> np.ndarray:
    try:
        return np.array([[float(c) for c in row] for row in cells], dtype=float)
    except ValueError as exc:
        raise DatasetError(f"non-numeric feature cell: {exc}") from None


def cmd_parity(args) -> int:
    from .reference import train_float_reference

    need(args, "seed")
    args.lambda_ = getattr(args, "lambda")
    hp = hyperparams(args)
    cfg = hp.cfg
    if args.data is None:
        x_real, y = make_gaussians(1000, 8, args.seed, separation=2.0)
        x_raw = quantize_matrix(x_real, cfg)
        source = "synthetic-gaussians"
    else:
        names, y, cells = read_csv(args.data, args.label_col)
        x_real = _real_matrix(cells)
        x_raw = dataset(args).x
        source = str(args.data)
    tr_idx, te_idx = train_test_split(len(y), args.test_fraction, args.seed)
    t0 = time.perf_counter()
    model, _ = train(Dataset(x_raw[tr_idx], y[tr_idx], cfg), hp)
    t_fixed = time.perf_counter() - t0
    acc_fixed = float((model.predict(x_raw[te_idx]) == y[te_idx]).mean())
    t0 = time.perf_counter()
    ref = train_float_reference(
        x_real[tr_idx], y[tr_idx], hp.trees, hp.depth, hp.bins,
        eta=float(args.eta), lam=float(args.lambda_), gamma=float(args.gamma), p_min=float(args.p_min),
    )
    t_float = time.perf_counter() - t0
    acc_float = float((ref.predict(x_real[te_idx]) == y[te_idx]).mean())
    delta = abs(acc_fixed - acc_float)
    emit(
        args,
        {
            "source": source,
            "n_train": int(len(tr_idx)),
            "n_test": int(len(te_idx)),
            "acc_fixed": acc_fixed,
            "acc_float": acc_float,
            "delta": delta,
            "within_tolerance": delta <= args.tolerance,
            "seconds_fixed": round(t_fixed, 4),
            "seconds_float": round(t_float, 4),
        },
    )
    return EXIT_OK if delta <= args.tolerance else EXIT_REJECT


def cmd_forest_train(args) -> int:
    from .forest import ForestParams, forest_train, make_forest_spec
    from .serialize import forest_to_json

    need(args, "data", "seed", "out")
    ds = dataset(args)
    try:
        spec = make_forest_spec(ds.n, ForestParams(args.trees, args.depth, args.bins), args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    model = forest_train(ds, spec)
    Path(args.out).write_text(forest_to_json(model, spec))
    print(f"trained forest of {len(model.trees)} trees -> {args.out}")
    return EXIT_OK


def cmd_forest_certify(args) -> int:
    from .forest import forest_certify
    from .serialize import forest_from_json

    need(args, "data", "model")
    model, spec = forest_from_json(Path(args.model).read_text())
    ds = dataset(args, model.cfg.frac_bits)
    report = forest_certify(ds, model, spec)
    emit(args, report.to_json())
    return EXIT_OK if report.accepted else EXIT_REJECT


def cmd_gadget_selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest(seed=args.seed if args.seed is not None else 0)
    emit(args, results)
    return EXIT_OK if results["passed"] else EXIT_REJECT


HANDLERS = {
    "train": cmd_train,
    "certify": cmd_certify,
    "prove": cmd_prove,
    "verify": cmd_verify,
    "mutate": cmd_mutate,
    "parity": cmd_parity,
    "forest-train": cmd_forest_train,
    "forest-certify": cmd_forest_certify,
    "gadget-selftest": cmd_gadget_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        args = resolve(args)
        return HANDLERS[args.command](args)
    except (UsageError, DatasetError, FormatError) as exc:
        print(f"fxgb {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"fxgb {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FxgbError as exc:
        print(f"fxgb {args.command}: {exc}", file=sys.stderr)
        return EXIT_REJECT


if __name__ == "__main__":
    raise SystemExit(main())
