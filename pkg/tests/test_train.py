import itertools

import numpy as np
import pytest

from fxgb import fxp
from fxgb.datasets import make_gaussians, quantize_matrix
from fxgb.errors import BoundViolation, DatasetError
from fxgb.fxp import FxpConfig
from fxgb.reference import oracle_fxp, oracle_split, train_float_reference
from fxgb.train import (
    B_DUM,
    F_DUM,
    G_SQ_LIMIT,
    T_DUM,
    Dataset,
    Hyperparams,
    base_logit,
    find_split,
    grad_hess,
    leaf_weight,
    node_histograms,
    prebin,
    split_gains,
    train,
)

from conftest import load_golden


def hp_for(cfg, **kw):
    base = dict(trees=1, depth=1, bins=4, eta=0.3, lam=1.0, gamma=0.0)
    base.update(kw)
    return Hyperparams.from_reals(cfg=cfg, **base)


# -- prebin ----------------------------------------------------------------------


def test_prebin_equal_width():
    bt = prebin(np.array([[0], [4], [8], [12]]), 4)
    assert bt.edges[0, 1:].tolist() == [0, 3, 6, 9]
    assert bt.edges[0, 0] == T_DUM
    assert bt.bin_id[:, 0].tolist() == [1, 2, 3, 4]


def test_prebin_constant_column():
    bt = prebin(np.array([[5], [5], [5]]), 4)
    assert bt.edges[0, 1:].tolist() == [5, 5, 5, 5]
    assert bt.bin_id[:, 0].tolist() == [4, 4, 4]


def test_prebin_single_row():
    bt = prebin(np.array([[7, -3]]), 8)
    assert bt.bin_id.tolist() == [[8, 8]]


def test_prebin_bin_is_indicator_sum():
    rng = np.random.default_rng(1)
    x = rng.integers(-1000, 1000, size=(60, 3))
    bt = prebin(x, 7)
    for i, f in itertools.product(range(60), range(3)):
        assert bt.bin_id[i, f] == sum(int(bt.edges[f, b] <= x[i, f]) for b in range(1, 8))
    assert np.all(np.diff(bt.edges[:, 1:], axis=1) >= 0)


# -- base logit and gradients --------------------------------------------------


def test_base_logit_balanced(cfg20):
    assert base_logit(np.array([0, 1]), hp_for(cfg20)) == 0


def test_base_logit_all_ones_matches_oracle(cfg20):
    hp = hp_for(cfg20)
    want = oracle_fxp("base_logit", {"y": [1, 1, 1], "p_min": hp.p_min}, 20).expected
    assert base_logit(np.array([1, 1, 1]), hp) == want
    assert want == fxp.logit_from_prob(hp.p_max, cfg20)


def test_base_logit_odd_symmetry(cfg20):
    hp = hp_for(cfg20)
    assert base_logit(np.zeros(5, dtype=int), hp) == -base_logit(np.ones(5, dtype=int), hp)


def test_grad_hess_examples(cfg20):
    S = cfg20.scale
    g, h = grad_hess(np.array([0, 2 * S, 5 * S, -2 * S]), np.array([1, 1, 1, 0]), cfg20)
    assert g.tolist() == [-S // 2, 0, 0, 0]
    assert h.tolist() == [S // 4, 0, 0, 0]


def test_grad_hess_matches_scalar_ops(cfg20):
    rng = np.random.default_rng(2)
    z = rng.integers(-3 * cfg20.scale, 3 * cfg20.scale, size=500)
    y = rng.integers(0, 2, size=500)
    g, h = grad_hess(z, y, cfg20)
    for zi, yi, gi, hi in zip(z, y, g, h):
        p = fxp.sigmoid_wide(int(zi), cfg20)
        assert gi == p - int(yi) * cfg20.scale
        assert hi == fxp.fxp_mul(p, cfg20.scale - p, cfg20)


# -- split finding ---------------------------------------------------------------


@pytest.mark.parametrize("case", load_golden("split_cases.json"), ids=lambda c: str(c["inputs"]["bins"]))
def test_find_split_golden(case, cfg20):
    inp = case["inputs"]
    hp = Hyperparams(1, 1, inp["bins"], cfg20.scale // 4, inp["lam"], inp["gamma"], 1, cfg20)
    g, h = np.array(inp["g"]), np.array(inp["h"])
    bin_id = np.array(inp["bin_id"])
    gains = split_gains(*node_histograms(g, h, bin_id, hp.bins), hp)
    for key, want in case["expected"]["gains"].items():
        f, b = map(int, key.split(","))
        assert gains[f, b - 1] == want, key
    assert list(find_split(g, h, bin_id, hp)) == case["expected"]["argmax"]


def test_find_split_zero_gradients(cfg20):
    hp = hp_for(cfg20, gamma=0.5)
    f, b, gain = find_split(np.zeros(6, dtype=int), np.full(6, 100), np.tile([[1, 2], [3, 4]], (3, 1)), hp)
    assert (f, b, gain) == (0, 1, -hp.gamma)


def test_find_split_single_sample(cfg20):
    hp = hp_for(cfg20, gamma=0.25)
    gains = split_gains(*node_histograms(np.array([-5000]), np.array([900]), np.array([[2, 3]]), hp.bins), hp)
    assert np.all(gains == -hp.gamma)


def test_find_split_random_vs_oracle(cfg20):
    rng = np.random.default_rng(3)
    for _ in range(200):
        n, d, B = int(rng.integers(1, 12)), int(rng.integers(1, 4)), int(rng.integers(2, 9))
        g = rng.integers(-cfg20.scale, cfg20.scale, size=n)
        h = rng.integers(0, cfg20.scale // 4, size=n)
        bin_id = rng.integers(1, B + 1, size=(n, d))
        lam, gamma = int(rng.integers(1, cfg20.scale)), int(rng.integers(0, 1000))
        hp = Hyperparams(1, 1, B, cfg20.scale, lam, gamma, 1, cfg20)
        want = oracle_split(g.tolist(), h.tolist(), bin_id.tolist(), B, lam, gamma)["argmax"]
        assert list(find_split(g, h, bin_id, hp)) == want


def test_find_split_forced_tie_prefers_first_index(cfg20):
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = 10
        col = rng.integers(1, 5, size=n)
        bin_id = np.stack([col, col, col], axis=1)  # duplicated feature columns tie exactly
        g = rng.integers(-cfg20.scale, cfg20.scale, size=n)
        h = rng.integers(1, cfg20.scale // 4, size=n)
        hp = Hyperparams(1, 1, 4, cfg20.scale, cfg20.scale, 0, 1, cfg20)
        table = oracle_split(g.tolist(), h.tolist(), bin_id.tolist(), 4, hp.lam, 0)["gains"]
        best = max(table.values())
        first = min((tuple(map(int, k.split(","))) for k, v in table.items() if v == best))
        f, b, gain = find_split(g, h, bin_id, hp)
        assert (f, b) == first and gain == best
        assert f == 0


# -- leaf weights and bounds -----------------------------------------------------


def test_leaf_weight_examples(cfg20):
    hp = hp_for(cfg20)
    S = cfg20.scale
    assert leaf_weight(0, 0, hp) == 0
    assert leaf_weight(1000 * S, S, hp) == S
    assert leaf_weight(-1000 * S, S, hp) == -S
    # G / (H + lam) with the numerator lifted by S, truncated toward zero
    assert leaf_weight(-S // 2, S, hp) == -(S // 2 * S // (2 * S))


def test_gradient_square_bound_is_hard_error(cfg20):
    hp = Hyperparams(1, 1, 2, cfg20.scale, cfg20.scale, 0, 1, cfg20)
    g = np.array([G_SQ_LIMIT, 1])
    with pytest.raises(BoundViolation):
        find_split(g, np.array([1, 1]), np.array([[1], [2]]), hp)


def test_trainer_refuses_oversized_dataset():
    cfg = FxpConfig(28)
    n = 40
    x = np.arange(n).reshape(n, 1)
    y = (np.arange(n) >= n // 2).astype(int)
    ds = Dataset(x, y, cfg)
    # 20 same-class samples with |g| = S/2 on one side already exceed sqrt(p/2) at F=28.
    with pytest.raises(BoundViolation):
        train(ds, Hyperparams(1, 1, 4, cfg.scale // 2, cfg.scale, 0, 1, cfg))


# -- training ---------------------------------------------------------------------


def test_train_two_separable_samples(cfg20):
    S = cfg20.scale
    ds = Dataset(np.array([[0], [S]]), np.array([0, 1]), cfg20)
    hp = hp_for(cfg20, bins=2)
    model, la = train(ds, hp)
    tree = model.trees[0]
    assert tree.f.tolist() == [0]
    assert tree.t.tolist() == [S // 2]
    g, h = grad_hess(np.zeros(2, dtype=np.int64), ds.y, cfg20)
    assert tree.w.tolist() == [leaf_weight(int(g[0]), int(h[0]), hp), leaf_weight(int(g[1]), int(h[1]), hp)]
    assert tree.w[0] > 0 > tree.w[1]
    assert la.leaves.tolist() == [[1, 2]]


def test_train_constant_labels_all_dummy(cfg20):
    rng = np.random.default_rng(5)
    ds = Dataset(rng.integers(-cfg20.scale, cfg20.scale, size=(30, 3)), np.ones(30, dtype=int), cfg20)
    model, la = train(ds, hp_for(cfg20, trees=3, depth=3, bins=8))
    for k, tree in enumerate(model.trees):
        assert tree.f.tolist() == [F_DUM] * 7
        assert tree.t.tolist() == [T_DUM] * 7
        assert np.unique(la.leaves[k]).size == 1
    assert B_DUM == 0


def test_score_recurrence_and_full_shape(cfg20):
    x, y = make_gaussians(80, 4, seed=6)
    ds = Dataset(quantize_matrix(x, cfg20), y, cfg20)
    hp = hp_for(cfg20, trees=4, depth=3, bins=16)
    model, la = train(ds, hp)
    assert np.all(la.scores[0] == model.z0)
    for k, tree in enumerate(model.trees):
        assert tree.f.shape == (7,) and tree.t.shape == (7,) and tree.w.shape == (8,)
        assert np.all(np.abs(tree.w) <= cfg20.scale)
        assert np.array_equal(la.leaves[k], tree.apply(ds.x))
        step = np.array([fxp.fxp_mul(hp.eta, int(tree.w[leaf - 1]), cfg20) for leaf in la.leaves[k]])
        assert np.array_equal(la.scores[k + 1], la.scores[k] - step)
    assert np.array_equal(model.decision(ds.x), la.scores[-1])


def test_train_is_deterministic(cfg20):
    from fxgb.serialize import model_to_json

    x, y = make_gaussians(60, 3, seed=7)
    ds = Dataset(quantize_matrix(x, cfg20), y, cfg20)
    hp = hp_for(cfg20, trees=3, depth=2, bins=8)
    assert model_to_json(train(ds, hp)[0]) == model_to_json(train(ds, hp)[0])


def test_train_rejects_bad_labels(cfg20):
    with pytest.raises(DatasetError):
        train(Dataset(np.zeros((2, 1), dtype=int), np.array([0, 2]), cfg20), hp_for(cfg20))


def test_hyperparams_validation(cfg20):
    with pytest.raises(ValueError):
        hp_for(cfg20, gamma=-0.1).validate()
    with pytest.raises(ValueError):
        hp_for(cfg20, bins=1).validate()
    with pytest.raises(ValueError):
        Hyperparams(1, 13, 4, 1, 1, 0, 1, cfg20).validate()


def test_split_choices_agree_with_float_reference():
    # At F=24 the 50-sample instance stays inside the sqrt(p/2) bound; F=28 does not.
    cfg = FxpConfig(24)
    x, y = make_gaussians(50, 3, seed=8, separation=1.5)
    ds = Dataset(quantize_matrix(x, cfg), y, cfg)
    hp = hp_for(cfg, trees=3, depth=2, bins=8)
    model, _ = train(ds, hp)
    ref = train_float_reference(ds.x / cfg.scale, y, 3, 2, 8, eta=0.3, lam=1.0, gamma=0.0)
    for mine, theirs in zip(model.trees, ref.trees):
        assert mine.f.tolist() == theirs.f.tolist()
        assert np.allclose(mine.t / cfg.scale, np.where(np.isinf(theirs.t), T_DUM / cfg.scale, theirs.t), atol=1e-5)
    assert np.array_equal(model.predict(ds.x), ref.predict(ds.x / cfg.scale))
