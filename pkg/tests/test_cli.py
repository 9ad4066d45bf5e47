import json

import numpy as np
import pytest

from fxgb import fxp
from fxgb.cli import COMMANDS, build_parser, main
from fxgb.datasets import ingest_csv, make_gaussians, read_csv, write_csv
from fxgb.errors import DatasetError
from fxgb.fxp import FxpConfig

SMALL = ["--trees", "2", "--depth", "2", "--bins", "8"]


@pytest.fixture
def csv_path(tmp_path):
    x, y = make_gaussians(30, 3, seed=1, separation=2.0)
    path = tmp_path / "d.csv"
    write_csv(path, x, y)
    return path


def run(*argv):
    return main([str(a) for a in argv])


def trained(tmp_path, csv_path):
    model = tmp_path / "m.json"
    assert run("train", "--data", csv_path, *SMALL, "--out", model) == 0
    return model


# -- ingestion --------------------------------------------------------------------


def test_ingest_csv(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text("b,target,a\n1.5,1,-0.25\n0.1,0,3\n")
    ds = ingest_csv(path, 4, label_col="target")
    assert ds.y.tolist() == [1, 0]
    cfg = FxpConfig(4)
    assert ds.x.tolist() == [[fxp.quantize("1.5", cfg), fxp.quantize("-0.25", cfg)], [fxp.quantize("0.1", cfg), fxp.quantize("3", cfg)]]
    names, _, _ = read_csv(path, "target")
    assert names == ["b", "a"]


def test_ingest_csv_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x0,label\n1.0,0\nabc,1\n")
    with pytest.raises(DatasetError, match=r"row 3, column 'x0'"):
        ingest_csv(path)
    path.write_text("")
    with pytest.raises(DatasetError, match="empty"):
        ingest_csv(path)
    path.write_text("x0,label\n1,2\n")
    with pytest.raises(DatasetError, match="label"):
        ingest_csv(path)


# -- commands -------------------------------------------------------------------------


def test_help_lists_every_flag(capsys):
    parser = build_parser()
    for name, (_, opts) in COMMANDS.items():
        with pytest.raises(SystemExit):
            parser.parse_args([name, "--help"])
        out = capsys.readouterr().out
        for opt in opts:
            assert "--" + opt.replace("_", "-") in out, (name, opt)


def test_train_certify_and_determinism(tmp_path, csv_path):
    model = trained(tmp_path, csv_path)
    first = model.read_bytes(), (tmp_path / "m.json.leaves.json").read_bytes()
    again = tmp_path / "m2.json"
    assert run("train", "--data", csv_path, *SMALL, "--out", again) == 0
    assert again.read_bytes() == first[0]
    assert (tmp_path / "m2.json.leaves.json").read_bytes() == first[1]
    report = tmp_path / "r.json"
    assert run("certify", "--data", csv_path, "--model", model, "--report", report) == 0
    assert json.loads(report.read_text())["accepted"] is True


def test_usage_and_io_errors(tmp_path, csv_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert run("train", "--data", empty, "--out", tmp_path / "m.json") == 2
    assert run("certify", "--data", tmp_path / "missing.csv", "--model", tmp_path / "m.json") == 2
    assert run("train", "--data", csv_path) == 2
    assert run("no-such-command") == 2
    assert run("train", "--data", csv_path, "--gamma", "-1", "--out", tmp_path / "m.json") == 2


@pytest.mark.parametrize("kind", ["z0", "feat", "thresh", "weight", "dummy"])
def test_mutate_then_certify_rejects(tmp_path, csv_path, kind):
    model = trained(tmp_path, csv_path)
    bad, bad2 = tmp_path / "bad.json", tmp_path / "bad2.json"
    assert run("mutate", "--data", csv_path, "--model", model, "--mutation", kind, "--seed", 3, "--out", bad) == 0
    assert run("mutate", "--data", csv_path, "--model", model, "--mutation", kind, "--seed", 3, "--out", bad2) == 0
    assert bad.read_bytes() == bad2.read_bytes() != model.read_bytes()
    report = tmp_path / "r.json"
    assert run("certify", "--data", csv_path, "--model", bad, "--leaves", tmp_path / "m.json.leaves.json", "--report", report) == 1
    assert json.loads(report.read_text())["failures"]


def test_mutate_requires_seed(tmp_path, csv_path):
    model = trained(tmp_path, csv_path)
    assert run("mutate", "--data", csv_path, "--model", model, "--mutation", "z0", "--out", tmp_path / "x.json") == 2


def test_prove_verify(tmp_path, csv_path):
    model = trained(tmp_path, csv_path)
    tr = tmp_path / "t.bin"
    assert run("prove", "--data", csv_path, "--model", model, "--seed", 7, "--transcript", tr) == 0
    first = tr.read_bytes()
    assert run("prove", "--data", csv_path, "--model", model, "--seed", 7, "--transcript", tr) == 0
    assert tr.read_bytes() == first
    assert run("verify", "--transcript", tr, "--seed", 1) == 0
    assert run("verify", "--transcript", tr, "--seed", 1, "--data", csv_path, "--model", model) == 0

    corrupt = tmp_path / "c.bin"
    data = bytearray(first)
    data[len(data) // 2] ^= 0x10
    corrupt.write_bytes(bytes(data))
    assert run("verify", "--transcript", corrupt, "--commitments", str(tr) + ".commit.json", "--seed", 1) == 1

    pub = json.loads((tmp_path / "t.bin.commit.json").read_text())
    pub["model"] = "00" * 32
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps(pub))
    assert run("verify", "--transcript", tr, "--commitments", wrong, "--seed", 1) == 1

    # an opening against a different model fails even though the transcript is intact
    other = tmp_path / "o.json"
    assert run("train", "--data", csv_path, "--trees", "2", "--depth", "2", "--bins", "4", "--out", other) == 0
    assert run("verify", "--transcript", tr, "--seed", 1, "--data", csv_path, "--model", other, "--openings", str(tr) + ".open.json") == 1


def test_prove_dishonest_model_fails_verification(tmp_path, csv_path):
    model = trained(tmp_path, csv_path)
    bad = tmp_path / "bad.json"
    assert run("mutate", "--data", csv_path, "--model", model, "--mutation", "weight", "--seed", 2, "--out", bad) == 0
    tr = tmp_path / "t.bin"
    assert run("prove", "--data", csv_path, "--model", bad, "--seed", 7, "--transcript", tr) == 0
    assert run("verify", "--transcript", tr, "--seed", 1) == 1


def test_config_file_precedence(tmp_path, csv_path):
    conf = tmp_path / "run.conf"
    conf.write_text(f"# defaults\ndata = {csv_path}\ntrees = 3\ndepth = 1\nbins = 4\n")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("train", "--config", conf, "--out", a) == 0
    assert len(json.loads(a.read_text())["trees"]) == 3
    assert run("train", "--config", conf, "--trees", "1", "--out", b) == 0
    assert len(json.loads(b.read_text())["trees"]) == 1
    conf.write_text("bogus = 1\n")
    assert run("train", "--config", conf, "--data", csv_path, "--out", a) == 2


def test_parity_synthetic(tmp_path):
    report = tmp_path / "p.json"
    assert run("parity", "--seed", 0, "--report", report) == 0
    doc = json.loads(report.read_text())
    assert doc["delta"] <= 0.01
    assert doc["delta"] == abs(doc["acc_fixed"] - doc["acc_float"])
    assert doc["seconds_fixed"] >= 0 and doc["seconds_float"] >= 0


def test_parity_one_class(tmp_path):
    path = tmp_path / "one.csv"
    x = np.random.default_rng(0).normal(size=(40, 2))
    write_csv(path, x, np.ones(40, dtype=int))
    report = tmp_path / "p.json"
    assert run("parity", "--data", path, "--seed", 0, *SMALL, "--report", report) == 0
    doc = json.loads(report.read_text())
    assert doc["acc_fixed"] == doc["acc_float"] == 1.0


def test_forest_commands(tmp_path, csv_path):
    model = tmp_path / "f.json"
    assert run("forest-train", "--data", csv_path, "--trees", 3, "--depth", 2, "--bins", 8, "--seed", 4, "--out", model) == 0
    first = model.read_bytes()
    assert run("forest-train", "--data", csv_path, "--trees", 3, "--depth", 2, "--bins", 8, "--seed", 4, "--out", model) == 0
    assert model.read_bytes() == first
    assert run("forest-certify", "--data", csv_path, "--model", model) == 0
    doc = json.loads(first)
    doc["trees"][0]["w"][0] = str(int(doc["trees"][0]["w"][0]) + 1)
    model.write_text(json.dumps(doc))
    assert run("forest-certify", "--data", csv_path, "--model", model) == 1
    assert run("forest-train", "--data", csv_path, "--out", model) == 2


def test_gadget_selftest(tmp_path):
    report = tmp_path / "g.json"
    assert run("gadget-selftest", "--seed", 1, "--report", report) == 0
    assert json.loads(report.read_text())["passed"] is True
