import math

import numpy as np
import pytest

from jointtype import kernels
from jointtype.embedder import (EmbeddingModel, TrainConfig, TrainingError, all_candidates_loss,
                                build_graph, compute_objective, corrupt_slot, default_iterations,
                                init_model, label_levels, neg_feature_sample, partial_label_loss,
                                step_partial_label, step_second_order, step_translation, train,
                                translation_error, zero_model_objective)
from jointtype.kb import NONE_TYPE
from jointtype.sampling import AliasTable, SplitMix64

from gradcheck import partial_label_case, second_order_case, translation_case


@pytest.fixture(scope="module")
def graph(small_run, small_synth):
    return build_graph(small_run.labeled, small_run.features, small_synth.kb.hierarchy)


# ---------------------------------------------------------------- gradients

@pytest.mark.parametrize("seed", range(10))
def test_second_order_gradient(seed):
    assert second_order_case(np.random.default_rng(seed)) < 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_partial_label_gradient(seed):
    assert partial_label_case(np.random.default_rng(seed)) < 1e-4


@pytest.mark.parametrize("seed", range(5))
def test_partial_label_gradient_levels(seed):
    lv = [0, 0, 0, 1, 1, 1, 1, 0]
    assert partial_label_case(np.random.default_rng(seed), K=8, levels=lv) < 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_translation_gradient(seed):
    assert translation_case(np.random.default_rng(seed)) < 1e-4


def test_second_order_saturation_and_zero_rate():
    u = np.full(4, 10.0)
    C = np.full((2, 4), 10.0)
    u0, C0 = u.copy(), C.copy()
    step_second_order(u, C, 0, [], 0.1)
    assert np.allclose(u, u0, atol=1e-12) and np.allclose(C, C0, atol=1e-12)
    rng = np.random.default_rng(0)
    u, C = rng.normal(size=4), rng.normal(size=(3, 4))
    u0, C0 = u.copy(), C.copy()
    step_second_order(u, C, 0, [1, 2], 0.0)
    assert np.array_equal(u, u0) and np.array_equal(C, C0)


# ---------------------------------------------------------------- partial label

def _types(scores):
    """Type matrix whose dot products with e_0 are ``scores``."""
    T = np.zeros((len(scores), 2))
    T[:, 0] = scores
    return T


def test_partial_label_values():
    u = np.array([1.0, 0.0])
    loss, bc, bn = partial_label_loss(u, _types([0.9, 0.2, 0.1]), [0])
    assert loss == pytest.approx(0.3) and (bc, bn) == (0, 1)
    assert partial_label_loss(u, _types([2.0, 0.5]), [0])[0] == 0.0
    assert partial_label_loss(u, _types([0.3, 0.1]), [0, 1]) == (0.0, 0, -1)
    # tie between candidates: lowest id
    assert partial_label_loss(u, _types([0.5, 0.5, 0.0]), [0, 1])[1] == 0


def test_partial_label_per_level():
    u = np.array([1.0, 0.0])
    T = _types([0.9, 0.2, 0.4, 0.8])
    levels = [0, 0, 1, 1]
    loss, bc, bn = partial_label_loss(u, T, [0, 2], levels)
    assert loss == pytest.approx(0.3 + 1.4)


def test_all_candidates_loss():
    u = np.array([1.0, 0.0])
    T = _types([0.9, 0.2, 0.1])
    # 0 vs rival 1: 1-0.7; 1 vs rival 0: 1+0.7
    assert all_candidates_loss(u, T, [0, 1]) == pytest.approx(0.3 + 1.7)
    assert all_candidates_loss(u, T, [0]) == pytest.approx(partial_label_loss(u, T, [0])[0])
    v = u.copy()
    Tv = T.copy()
    got = step_partial_label(v, Tv, [0, 1], 0.01, 0.0, loss="all_candidates")
    assert got == pytest.approx(2.0)


def test_step_decreases_loss():
    rng = np.random.default_rng(3)
    for _ in range(50):
        u, T = rng.normal(size=6), rng.normal(size=(5, 6))
        cand = [0, 2]
        before = partial_label_loss(u, T, cand)[0]
        if before <= 0:
            continue
        step_partial_label(u, T, cand, 1e-3, 0.0)
        assert partial_label_loss(u, T, cand)[0] < before


def test_noop_and_shrink():
    u = np.array([1.0, 0.0])
    T = _types([3.0, 0.0])
    u0, T0 = u.copy(), T.copy()
    step_partial_label(u, T, [0], 0.1, 0.0)
    assert np.array_equal(u, u0) and np.array_equal(T, T0)
    lam, alpha = 0.5, 0.1
    for k in range(1, 4):
        step_partial_label(u, T, [0], alpha, lam)
        assert np.linalg.norm(u) == pytest.approx((1 - alpha * lam) ** k)


def test_argmax_scale_invariance():
    rng = np.random.default_rng(5)
    for _ in range(20):
        u, T = rng.normal(size=4), rng.normal(size=(6, 4))
        assert partial_label_loss(u, T, [1, 3])[1:] == partial_label_loss(u, 7.5 * T, [1, 3])[1:]


def test_locality():
    rng = np.random.default_rng(0)
    u, T = rng.normal(size=4), rng.normal(size=(6, 4))
    T0 = T.copy()
    _, bc, bn = partial_label_loss(u, T, [1, 2])
    step_partial_label(u, T, [1, 2], 0.1, 0.01)
    changed = {k for k in range(6) if not np.array_equal(T[k], T0[k])}
    assert changed <= {bc, bn}


def test_levels_of_hierarchy(toy_kb):
    h = toy_kb.hierarchy
    lv = dict(zip(h.entity_labels(), label_levels(h).tolist()))
    assert lv == {"person": 0, "politician": 1, "artist": 1, "location": 0, "country": 1,
                  "city": 1, "organization": 0, NONE_TYPE: 0}


# ---------------------------------------------------------------- translation

def test_translation_error():
    assert translation_error([0, 1], [1, 0], [1, 1]) == 0.0
    assert translation_error([0, 0], [0, 0], [0, 0]) == 0.0
    assert translation_error([0, 0], [0, 0], [3, 4]) == 25.0


def test_translation_satisfied_margin_is_noop():
    z, m1, m2 = np.zeros(2), np.zeros(2), np.zeros(2)
    zc, m1c, m2c = np.zeros(2), np.zeros(2), np.array([1.0, 0.5])
    vs = [v.copy() for v in (z, m1, m2, zc, m1c, m2c)]
    assert step_translation((z, m1, m2), (zc, m1c, m2c), 0.1) == 0.0
    for a, b in zip(vs, (z, m1, m2, zc, m1c, m2c)):
        assert np.array_equal(a, b)


def test_freeze_entities():
    rng = np.random.default_rng(1)
    vs = [rng.normal(scale=0.1, size=3) for _ in range(6)]
    ms = [vs[i].copy() for i in (1, 2, 4, 5)]
    step_translation(vs[:3], vs[3:], 0.1, freeze_entities=True)
    assert all(np.array_equal(a, vs[i]) for a, i in zip(ms, (1, 2, 4, 5)))


def test_corrupt_slot_uniform():
    rng = SplitMix64(4)
    counts = np.bincount([corrupt_slot(rng) for _ in range(100_000)], minlength=3) / 100_000
    assert np.all(np.abs(counts - 1 / 3) < 0.02 / 3 * 3)


# ---------------------------------------------------------------- sampling

def test_negative_sampling_ratio():
    t = AliasTable(np.power([1.0, 16.0], 0.75))
    draws = neg_feature_sample(t, 100_000, SplitMix64(9))
    ratio = draws.count(1) / draws.count(0)
    assert abs(ratio - 8) / 8 < 0.05
    assert set(neg_feature_sample(AliasTable([2.0]), 20, SplitMix64(1))) == {0}


# ---------------------------------------------------------------- model and training

def test_init(graph):
    a = init_model(graph, TrainConfig(seed=3))
    b = init_model(graph, TrainConfig(seed=3))
    for (_, x), (_, y) in zip(a.matrices(), b.matrices()):
        assert np.array_equal(x, y)
        assert np.all(np.abs(x) <= 0.5 / 50)
    one = init_model(graph, TrainConfig(d=1))
    assert all(np.all(np.abs(m) <= 0.5) for _, m in one.matrices())


def test_config_validation():
    for bad in (dict(d=0), dict(V=0), dict(lam=-1), dict(alpha=0), dict(margin=2.0),
                dict(loss="x"), dict(mode="x"), dict(epochs=0)):
        with pytest.raises(ValueError):
            TrainConfig(**bad).validate()


def test_empty_graph_rejected(graph):
    from dataclasses import replace
    empty = replace(graph, rel=replace(graph.rel, mention_ids=[]), ent=replace(graph.ent, mention_ids=[]))
    with pytest.raises(TrainingError, match="no training signal"):
        init_model(empty, TrainConfig())


def test_graph_consistency(graph, small_run):
    for sp in (graph.rel, graph.ent):
        assert sp.src.max() < sp.n_mentions and sp.dst.max() < len(sp.feature_names)
        assert np.allclose(sp.edge_table.probabilities(), sp.weight / sp.weight.sum())
        assert np.allclose(sp.noise_table.probabilities(),
                           sp.doc_freq ** 0.75 / (sp.doc_freq ** 0.75).sum())
        for i in range(0, sp.n_mentions, 97):
            assert len(sp.candidates(i)) >= 1
    none_row = graph.rel.labels.index(NONE_TYPE)
    for r, _, _ in graph.triples[:500]:
        assert none_row not in graph.rel.candidates(r).tolist()


def test_zero_model_objective(graph):
    m = init_model(graph, TrainConfig())
    for _, x in m.matrices():
        x[:] = 0.0
    ov = compute_objective(m, graph, TrainConfig(), "full")
    assert ov.total == pytest.approx(zero_model_objective(graph, 5), rel=1e-12)


def test_sampled_objective_close_to_full(graph):
    m = train(graph, TrainConfig(max_iters=20_000, convergence_tol=0)).model
    full = compute_objective(m, graph, TrainConfig(), "full").total
    sampled = compute_objective(m, graph, TrainConfig(), "sampled").total
    assert abs(sampled - full) / full < 0.05


def test_objective_decreases(graph):
    # a tolerance no real run meets keeps the periodic checks on for the whole budget
    res = train(graph, TrainConfig(max_iters=200_000, objective_check_every=20_000,
                                   convergence_tol=1e-15))
    vals = [v for _, v in res.trace]
    assert len(vals) >= 10
    assert np.median(vals[-3:]) < np.median(vals[:3])
    assert vals[-1] < vals[0]


def test_training_is_deterministic(graph, tmp_path):
    cfg = TrainConfig(max_iters=30_000, seed=7)
    a, b = train(graph, cfg), train(graph, cfg)
    a.model.save(tmp_path / "a.txt")
    b.model.save(tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert a.trace == b.trace


def test_backends_agree(graph):
    from jointtype.embedder import _run_stage
    cfg = TrainConfig(max_iters=3000, convergence_tol=0)
    out = []
    for name in ("cython", "python"):
        m = init_model(graph, cfg)
        impl = kernels.get_backend(name)
        from jointtype.embedder import _space_tuple, _triple_tuple
        impl.train_chunk(_space_tuple(m, graph, "rel"), _space_tuple(m, graph, "ent"),
                         _triple_tuple(graph), cfg.d, cfg.alpha, cfg.lam, cfg.V, 3000, 99,
                         impl.FLAG_RELATION | impl.FLAG_ENTITY | impl.FLAG_TRIPLES,
                         impl.LOSS_PARTIAL, 1, 0, 3000, False)
        out.append(m)
    for (_, x), (_, y) in zip(out[0].matrices(), out[1].matrices()):
        assert np.max(np.abs(x - y)) < 1e-12


def test_nonfinite_abort(graph):
    with pytest.raises(TrainingError, match="non-finite"):
        train(graph, TrainConfig(alpha=1e6, max_iters=20_000, objective_check_every=1000))


def test_budget(graph):
    assert default_iterations(graph, TrainConfig()) == graph.n_interactions
    assert default_iterations(graph, TrainConfig(epochs=2)) == 2 * graph.n_interactions
    assert default_iterations(graph, TrainConfig(max_iters=10)) == 10


def test_two_stage_freezes_entities(graph):
    res = train(graph, TrainConfig(mode="two_stage", max_iters=5000, convergence_tol=0,
                                   center_features=False))
    assert [s["stage"] for s in res.stages] == ["entity", "relation"]


def test_model_round_trip(graph, tmp_path):
    m = train(graph, TrainConfig(max_iters=2000)).model
    m.save(tmp_path / "m.txt", include_mentions=True)
    assert (tmp_path / "m.txt").read_text().startswith("JOINTTYPE v1 d=50 spaces=2\n")
    back = EmbeddingModel.load(tmp_path / "m.txt")
    for (_, x), (_, y) in zip(m.matrices(), back.matrices()):
        assert np.array_equal(x, y)
    assert back.labels == m.labels and back.feature_names == m.feature_names
    m.save(tmp_path / "n.txt")
    assert EmbeddingModel.load(tmp_path / "n.txt").mentions["rel"].shape == (0, 50)
    (tmp_path / "bad.txt").write_text("nope\n")
    with pytest.raises(ValueError):
        EmbeddingModel.load(tmp_path / "bad.txt")


def test_centering_removes_weighted_mean(graph):
    m = train(graph, TrainConfig(max_iters=20_000)).model
    for sp in ("rel", "ent"):
        w = graph.space(sp).doc_freq
        assert np.allclose(w @ m.features[sp], 0.0, atol=1e-9 * w.sum())
