import functools
import os
import tempfile

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jointtype.embedder import EmbeddingModel
from jointtype.inference import (InferenceConfig, Predictions, batch_predict, embed_mention,
                                 nearest_relation, predict_entity_typepath,
                                 predict_relation_type, relation_scores)
from jointtype.kb import NONE_TYPE, ROOT, load_hierarchy

from conftest import HIERARCHY

REL = ["born_in", "president_of", "capital_of", NONE_TYPE]
ENT = ["person", "politician", "artist", "location", "country", "city", "organization", NONE_TYPE]


def make_model(d=6, seed=0, rel_features=("a", "b", "c"), ent_features=("x", "y")):
    rng = np.random.default_rng(seed)
    return EmbeddingModel(
        d,
        {"rel": np.zeros((0, d)), "ent": np.zeros((0, d))},
        {"rel": rng.normal(size=(len(rel_features), d)), "ent": rng.normal(size=(len(ent_features), d))},
        {"rel": rng.normal(size=(len(REL), d)), "ent": rng.normal(size=(len(ENT), d))},
        {"rel": [], "ent": []},
        {"rel": list(rel_features), "ent": list(ent_features)},
        {"rel": list(REL), "ent": list(ENT)},
    )


def test_embed_single_and_sum():
    m = make_model()
    v, empty = embed_mention(["b"], None, m, "rel")
    assert not empty and np.array_equal(v, m.features["rel"][1])
    v, _ = embed_mention(["c", "a", "unseen", "a"], None, m, "rel")
    assert np.allclose(v, m.features["rel"][0] + m.features["rel"][2])


def test_embed_nothing_retained():
    m = make_model()
    v, empty = embed_mention(["zzz"], None, m, "ent")
    assert empty and not np.any(v) and v.shape == (m.d,)


def test_relation_identity_and_threshold():
    m = make_model()
    for k, label in enumerate(REL[:-1]):
        assert predict_relation_type(m.types["rel"][k] * 3.0, m) == (label, pytest.approx(1.0))
    # orthogonal to every relation vector: all cosines 0 < eta
    T = m.types["rel"][:-1]
    z = np.linalg.svd(T)[2][-1]
    label, best = predict_relation_type(z, m)
    assert label is None and abs(best) < 1e-9
    assert predict_relation_type(np.zeros(m.d), m)[0] is None


def test_none_excluded_unless_asked():
    m = make_model()
    z = m.types["rel"][REL.index(NONE_TYPE)]
    assert nearest_relation(z, m)[0] != NONE_TYPE
    assert nearest_relation(z, m, include_none=True)[0] == NONE_TYPE
    # the None type never comes back as a prediction
    assert predict_relation_type(z, m, InferenceConfig(include_none=True))[0] is None


def test_relation_oracle():
    m = make_model(d=8, seed=3)
    rng = np.random.default_rng(11)
    T = m.types["rel"][:-1]
    for _ in range(1000):
        z = rng.normal(size=8)
        cos = [float(z @ t / np.linalg.norm(z) / np.linalg.norm(t)) for t in T]
        k = max(range(len(cos)), key=lambda i: (cos[i], -i))
        want = REL[k] if cos[k] >= 0.35 else None
        got, best = predict_relation_type(z, m)
        assert got == want and best == pytest.approx(cos[k], abs=1e-12)


def test_relation_tie_lowest_id():
    m = make_model()
    m.types["rel"][1] = m.types["rel"][0]
    assert predict_relation_type(m.types["rel"][0], m)[0] == REL[0]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6), st.floats(0.01, 100))
def test_scale_invariance(z, c):
    m = make_model()
    z = np.array(z)
    a, b = predict_relation_type(z, m), predict_relation_type(c * z, m)
    assert a[0] == b[0]
    toy = _toy_hierarchy()
    assert predict_entity_typepath(z, m, toy)[0] == predict_entity_typepath(c * z, m, toy)[0]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6), st.floats(-1, 1), st.floats(0, 1))
def test_threshold_monotone(z, eta, bump):
    m = make_model()
    z = np.array(z)
    lo = predict_relation_type(z, m, InferenceConfig(eta=eta))[0]
    hi = predict_relation_type(z, m, InferenceConfig(eta=eta + bump))[0]
    assert not (lo is None and hi is not None)
    toy = _toy_hierarchy()
    plo = predict_entity_typepath(z, m, toy, InferenceConfig(eta=eta))[0] or []
    phi = predict_entity_typepath(z, m, toy, InferenceConfig(eta=eta + bump))[0] or []
    assert plo[:len(phi)] == phi


@functools.lru_cache(maxsize=1)
def _toy_hierarchy():
    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "h.tsv")
        with open(p, "w") as fh:
            fh.write(HIERARCHY)
        return load_hierarchy(p)


def test_typepath_examples(toy_kb):
    m = make_model()
    h = toy_kb.hierarchy
    person = m.types["ent"][ENT.index("person")]
    path, scores = predict_entity_typepath(person, m, h)
    assert path[0] == "person" and scores[0] == pytest.approx(1.0)
    # make every root child point away from the mention
    got = predict_entity_typepath(person, m, h, InferenceConfig(eta=1.01))
    assert got == (None, [])
    assert predict_entity_typepath(np.zeros(6), m, h) == (None, [])


def test_typepath_always_a_chain(toy_kb):
    h = toy_kb.hierarchy
    rng = np.random.default_rng(2)
    for seed in range(20):
        m = make_model(seed=seed)
        for _ in range(50):
            path, scores = predict_entity_typepath(rng.normal(size=6), m, h,
                                                   InferenceConfig(eta=rng.uniform(-1, 0.6)))
            if path is not None:
                assert h.is_chain(path) and len(scores) == len(path)
                assert path[0] in h.children[ROOT]


def test_entity_eta_override(toy_kb):
    m = make_model()
    person = m.types["ent"][ENT.index("person")]
    cfg = InferenceConfig(eta=0.35, entity_eta=1.5)
    assert predict_entity_typepath(person, m, toy_kb.hierarchy, cfg)[0] is None
    assert cfg.eta_relation == 0.35


class _M:
    def __init__(self, doc, sent, s, e):
        self.doc_id, self.sentence_index, self.start, self.end = doc, sent, s, e


def test_batch_predict_counts_and_scores(toy_kb, toy_corpus):
    m = make_model()
    mentions = [_M("d1", 0, 0, 2), _M("d1", 0, 5, 6), _M("d1", 0, 9, 10), _M("d1", 1, 0, 1)]
    preds = batch_predict(toy_corpus, mentions, m, toy_kb.hierarchy)
    assert len(preds.entities) == 4
    assert len(preds.relations) == 3 * 2
    # supplied spans are used verbatim
    assert {p.key for p in preds.entities} == {("d1", 0, 0, 2), ("d1", 0, 5, 6), ("d1", 0, 9, 10),
                                              ("d1", 1, 0, 1)}
    from jointtype.features import extract_relation_features
    for p in preds.relations:
        sent = toy_corpus.sentence(p.doc_id, p.sentence_index)
        vec, _ = embed_mention(extract_relation_features(sent, p.em1, p.em2), None, m, "rel")
        labels, sims = relation_scores(vec, m)
        if np.any(vec):
            assert p.score == pytest.approx(float(np.max(sims)), abs=1e-12)


def test_predictions_round_trip(tmp_path, toy_kb, toy_corpus):
    m = make_model()
    preds = batch_predict(toy_corpus, [_M("d1", 0, 0, 2), _M("d1", 0, 5, 6)], m, toy_kb.hierarchy)
    preds.dump(tmp_path / "p.jsonl")
    back = Predictions.load(tmp_path / "p.jsonl")
    assert back == preds
    (tmp_path / "bad.jsonl").write_text('{"kind": "entity"}\n')
    with pytest.raises(ValueError, match="bad.jsonl:1"):
        Predictions.load(tmp_path / "bad.jsonl")


def test_batch_on_trained_model(small_run):
    n = len(small_run.test_mentions)
    assert len(small_run.detected.entities) == len({(m.doc_id, m.sentence_index, m.start, m.end)
                                                    for m in small_run.test_mentions})
    assert n > 0
