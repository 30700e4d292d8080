import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jointtype import kernels
from jointtype.corpus import parse_corpus
from jointtype.segmenter import (SegmenterConfig, SegmenterError, _Lattice, best_segmentation_bruteforce,
                                 build_quality_examples, combine_quality, dump_mentions,
                                 estimate_priors, initial_priors, load_mentions, mine_patterns,
                                 run_segmentation, segment_quality, segment_sentence,
                                 train_quality_models, viterbi_training)

from conftest import corpus_text


def _obama_corpus(times=5):
    sents = ["Barack/NNP Obama/NNP spoke/VBD ./."] * times + ["of/IN the/DT year/NN"] * 4
    return parse_corpus(corpus_text(sents).splitlines())


def test_mine_patterns_counts():
    c = _obama_corpus()
    t = mine_patterns(c, 6, 3)
    assert t.words[("Barack", "Obama")] == 5
    assert t.pos[("NNP", "NNP")] == 5
    assert ("Barack", "Obama") not in mine_patterns(c, 6, 6).words
    assert all(len(g) == 1 for g in mine_patterns(c, 1, 3).words)
    assert all(v >= 3 for v in t.words.values())
    with pytest.raises(ValueError):
        mine_patterns(c, 0, 3)


def test_quality_examples(toy_kb):
    c = _obama_corpus()
    t = mine_patterns(c, 6, 3)
    ex = build_quality_examples(t, toy_kb, c, negative_ratio=100)
    pos = {g for g, y in zip(ex.phrases, ex.phrase_labels) if y}
    assert ("Barack", "Obama") in pos
    assert ("of", "the") in {g for g, y in zip(ex.phrases, ex.phrase_labels) if not y}
    assert ex.pos_positive[("NNP", "NNP")] == 5


def test_no_supervision_error(toy_kb):
    c = parse_corpus(corpus_text(["zz/NN yy/NN"] * 4).splitlines())
    with pytest.raises(SegmenterError, match="no supervision"):
        build_quality_examples(mine_patterns(c, 3, 2), toy_kb, c)


def test_single_class_rejected(small_synth):
    c = small_synth.train
    t = mine_patterns(c, 6, 3)
    ex = build_quality_examples(t, small_synth.kb, c)
    ex.phrase_labels[:] = 1
    with pytest.raises(SegmenterError, match="single class"):
        train_quality_models(ex, t)


@pytest.fixture(scope="module")
def quality(small_synth):
    c = small_synth.corpus
    t = mine_patterns(c, 6, 3)
    ex = build_quality_examples(t, small_synth.kb, c)
    return t, ex, train_quality_models(ex, t, SegmenterConfig())


def test_quality_model_separates(quality, small_synth):
    t, ex, model = quality
    assert model.train_accuracy["phrase"] > 0.95
    # held-out split: positives outscore negatives on average
    rng = np.random.default_rng(0)
    idx = rng.permutation(len(ex.phrases))
    cut = len(idx) * 2 // 3
    from jointtype.segmenter import QualityExamples
    tr, te = idx[:cut], idx[cut:]
    sub = QualityExamples([ex.phrases[i] for i in tr], ex.phrase_labels[tr],
                          [ex.pos_patterns[i] for i in tr], ex.pos_labels[tr], ex.pos_positive)
    m = train_quality_models(sub, t, SegmenterConfig(min_examples=5))
    s = m.phrase_scores([ex.phrases[i] for i in te])
    y = ex.phrase_labels[te]
    assert s[y == 1].mean() > s[y == 0].mean()


def test_segment_quality_range(quality):
    _, ex, model = quality
    for g, tags in zip(ex.phrases[:20], ex.pos_patterns[:20]):
        assert 0.0 <= segment_quality(g, tags, model) <= 1.0


def test_combine_quality():
    assert combine_quality(0.8, 0.6) == pytest.approx(0.7)
    assert combine_quality(0.0, 0.0) == 0.0
    assert combine_quality(1.0, 1.0) == 1.0


def test_estimate_priors():
    p = estimate_priors([("a",)] * 50, 3)
    assert p.length[0] == pytest.approx(51 / 53)
    assert p.length.sum() == pytest.approx(1.0)
    segs = [("Barack", "Obama")] * 4 + [("x", "y")] * 6
    p = estimate_priors(segs, 2, eps=1e-6)
    assert p.cond[("Barack", "Obama")] == pytest.approx(0.4, rel=1e-5)
    assert sum(v for g, v in p.cond.items() if len(g) == 2) <= 1.0


def test_one_token_sentence(quality):
    _, _, model = quality
    s = parse_corpus(corpus_text(["Hello/UH"]).splitlines()).sentence("d1", 0)
    seg, _ = segment_sentence(s, lambda w, t: 0.5, estimate_priors([("Hello",)], 3))
    assert seg.spans == [(0, 1)]


def test_uniform_tie_break():
    scores = np.zeros((5, 3))
    scores[:, :] = 0.0
    total, lengths, _ = kernels.viterbi_batch(scores, np.array([0, 5], dtype=np.int64))
    # fewest segments first, then the longest segment leftmost
    assert lengths.tolist() == [3, 2]
    assert best_segmentation_bruteforce(scores)[1] == (0, 3, 5)


@given(st.integers(1, 8), st.integers(1, 4), st.integers(0, 2**31))
@settings(max_examples=80, deadline=None)
def test_dp_equals_bruteforce(n, L, seed):
    rng = np.random.default_rng(seed)
    scores = rng.normal(size=(n, L)).round(1)      # rounding makes ties likely
    for i in range(n):
        scores[i, n - i:] = -1e300
    total, lengths, _ = kernels.viterbi_batch(scores, np.array([0, n], dtype=np.int64))
    bt, bb = best_segmentation_bruteforce(scores)
    assert total[0] == bt
    assert np.cumsum([0] + lengths.tolist()).tolist() == list(bb)


def test_backends_decode_identically():
    rng = np.random.default_rng(1)
    lens = rng.integers(1, 12, 200)
    off = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
    sc = rng.normal(size=(int(off[-1]), 5))
    a = kernels.get_backend("python").viterbi_batch(sc, off)
    b = kernels.viterbi_batch(sc, off)
    for x, y in zip(a, b):
        assert np.array_equal(np.asarray(x), np.asarray(y))


def test_viterbi_training_monotone(quality, small_synth):
    t, ex, model = quality
    sents = list(small_synth.corpus.sentences())
    lat = _Lattice(sents, t)
    seeds = [g for g, y in zip(ex.phrases, ex.phrase_labels) if y]
    priors = initial_priors(t, 1e-6, seeds)
    _, _, _, trace = viterbi_training(lat, model.phrase_scores(lat.wkeys),
                                      model.pos_scores(lat.tkeys), priors, 6)
    assert all(b >= a - 1e-6 * abs(a) for a, b in zip(trace, trace[1:]))


def _planted(ds, gold_sets):
    return {(g.doc_id, g.sentence_index, *e["span"]) for gs in gold_sets for g in gs
            for e in g.entities}


def test_run_segmentation_finds_planted(small_run, small_synth):
    res = small_run.segmentation
    found = {(m.doc_id, m.sentence_index, m.start, m.end) for m in res.mentions}
    gold = _planted(small_synth, [small_synth.gold, small_synth.train_gold])
    tp = len(found & gold)
    p, r = tp / len(found), tp / len(gold)
    assert 2 * p * r / (p + r) >= 0.9
    # segments tile every sentence
    for key, seg in list(res.segmentations.items())[:200]:
        n = len(small_synth.corpus.sentence(*key))
        assert seg.boundaries[0] == 0 and seg.boundaries[-1] == n
        assert all(a < b for a, b in zip(seg.boundaries, seg.boundaries[1:]))


def test_segmentation_deterministic(small_synth):
    c = small_synth.corpus
    a = run_segmentation(c, small_synth.kb, SegmenterConfig(max_rounds=2))
    b = run_segmentation(c, small_synth.kb, SegmenterConfig(max_rounds=2))
    assert a.mentions == b.mentions


def test_mentions_round_trip(small_run, tmp_path):
    ms = small_run.segmentation.mentions[:50]
    dump_mentions(ms, tmp_path / "m.tsv")
    back = load_mentions(tmp_path / "m.tsv")
    assert back == ms and [m.surface for m in back] == [m.surface for m in ms]
