import pytest

from jointtype.synthetic import SyntheticConfig, generate_synthetic


def _ambiguous_share(ds):
    n = multi = 0
    for g in ds.train_gold:
        s = ds.train.sentence(g.doc_id, g.sentence_index)

        def surf(sp):
            return " ".join(t.text for t in s.tokens[sp[0]:sp[1]])

        for r in g.relations:
            if r["label"] is None:
                continue
            a, b = ds.kb.link(surf(r["em1"])), ds.kb.link(surf(r["em2"]))
            cands = ds.kb.relations_between(a, b) if a and b else frozenset()
            if cands:
                n += 1
                multi += len(cands) >= 2
    return multi / n


def test_no_noise_singletons():
    assert _ambiguous_share(generate_synthetic(n_sentences=2000, seed=1, noise_rate=0.0)) == 0.0


def test_noise_rate_planted():
    assert _ambiguous_share(generate_synthetic(n_sentences=3000, seed=1, noise_rate=0.4)) == \
        pytest.approx(0.4, abs=0.05)


def test_same_seed_same_dataset(tmp_path):
    a = generate_synthetic(n_sentences=400, seed=3)
    b = generate_synthetic(SyntheticConfig(n_sentences=400, seed=3))
    pa, pb = a.save(tmp_path / "a"), b.save(tmp_path / "b")
    for k in pa:
        if pa[k].is_file():
            assert pa[k].read_bytes() == pb[k].read_bytes(), k
    c = generate_synthetic(n_sentences=400, seed=4)
    assert c.gold != a.gold


def test_shape():
    ds = generate_synthetic(n_sentences=1000, n_relation_types=3, n_entity_types=6, seed=0)
    h = ds.kb.hierarchy
    assert [r for r in h.relation_labels() if r != "None"] == ["r0", "r1", "r2"]
    assert len([t for t in h.entity_labels() if t != "None"]) == 6
    assert ds.train.n_sentences + ds.test.n_sentences == 1000
    assert ds.test.n_sentences == 100
