from collections import Counter

import pytest

from jointtype.corpus import parse_corpus
from jointtype.features import (FeatureDictionary, FeatureError, build_dictionary, dump_edges,
                                extract_entity_features, extract_relation_features, featurize,
                                featurize_corpus, load_brown, load_edges, word_shape)

from conftest import SENTENCES, corpus_text


@pytest.fixture
def sent(toy_corpus):
    return toy_corpus.sentence("d1", 0)


def test_running_example(sent):
    f = extract_relation_features(sent, (2, 4), (9, 11))
    for x in ("HEAD_EM1_Obama", "TKN_EM1_Barack", "EM1_BEFORE_EM2", "EM_DISTANCE_5",
              "Honolulu native", "native Barack", "PATTERN_NULL", "VBD", "VBN", "DT"):
        assert x in f
    between = ["was", "elected", "President", "of", "the"]
    assert all(w in f for w in between)
    assert {"native", "was", "the", "on"} <= set(f)
    assert not any(x.startswith(("4_", "8_")) for x in f)


def test_reverse_order_and_adjacent(sent):
    f = extract_relation_features(sent, (9, 11), (2, 4))
    assert "EM2_BEFORE_EM1" in f and "EM_DISTANCE_5" in f
    f = extract_relation_features(sent, (2, 4), (4, 5))
    assert "EM_DISTANCE_0" in f
    assert not {"VBD", "VBN", "NNP", "JJ"} & set(f)     # no between tokens, so no POS features


def test_in_pattern():
    c = parse_corpus(corpus_text(["Paris/NNP in/IN France/NNP"]).splitlines())
    f = extract_relation_features(c.sentence("d1", 0), (0, 1), (2, 3))
    assert "PATTERN_EM1_IN_EM2" in f and "PATTERN_NULL" not in f


def test_brown(tmp_path, sent):
    p = tmp_path / "b.tsv"
    p.write_text("Obama\t110111101\nStates\t0101\n")
    brown = load_brown(p)
    f = extract_relation_features(sent, (2, 4), (9, 11), brown)
    assert "4_1101" in f and "8_11011110" in f and "4_0101" in f
    base = extract_relation_features(sent, (2, 4), (9, 11))
    assert Counter(f) - Counter(base) == Counter(["4_1101", "8_11011110", "4_0101", "8_0101"])
    p.write_text("broken line\n")
    with pytest.raises(FeatureError):
        load_brown(p)


def test_entity_features(sent):
    f = extract_entity_features(sent, (2, 4))
    assert "HEAD_Obama" in f and "LEN_2" in f and "POS_NNP" in f and "SHAPE_Aaaaa" in f
    f0 = extract_entity_features(sent, (0, 1))
    left = [x for x in f0 if x.startswith("CTX_")]
    assert "CTX_native" in left and len(left) == 3 + 2
    assert word_shape("USA") == "AAA" and word_shape("B-52") == "A-00"


def test_extraction_is_order_free(sent):
    a = extract_relation_features(sent, (2, 4), (9, 11))
    b = extract_relation_features(sent, (2, 4), (9, 11))
    assert Counter(a) == Counter(b)


def test_dictionary():
    lists = [["a", "b"], ["a"], ["c", "a", "a"]]
    d = build_dictionary(lists, 2)
    assert d.strings == ["a"] and d.doc_freq.tolist() == [3]
    d1 = build_dictionary(lists, 1)
    assert d1.strings == ["a", "b", "c"]
    with pytest.raises(FeatureError):
        build_dictionary([["x"]], 2)
    e = featurize(lists, d1)
    assert e.weights[(e.rows == 2) & (e.feats == 0)].tolist() == [2.0]
    for r, fl in enumerate(lists):
        assert e.weights[e.rows == r].sum() == len(fl)
    e2 = featurize([["a", "b"], ["zz"]], d)
    assert e2.empty.tolist() == [1]


def test_document_frequency():
    lists = [["f", "f"]] * 7 + [["g"]] * 3
    d = build_dictionary(lists, 2)
    assert dict(zip(d.strings, d.doc_freq.tolist())) == {"f": 7, "g": 3}


def test_io_round_trip(small_run, tmp_path):
    fs = small_run.features
    fs.relation_dict.dump(tmp_path / "d.tsv")
    d = FeatureDictionary.load(tmp_path / "d.tsv")
    assert d.strings == fs.relation_dict.strings
    assert d.doc_freq.tolist() == fs.relation_dict.doc_freq.tolist()
    dump_edges(fs.entity_edges, fs.entity_ids, tmp_path / "e.tsv")
    e = load_edges(tmp_path / "e.tsv", fs.entity_ids)
    assert e.rows.tolist() == fs.entity_edges.rows.tolist()
    assert e.weights.tolist() == fs.entity_edges.weights.tolist()


def test_entity_type_injection(small_run, small_synth):
    lab = small_run.labeled
    inject = {m.mention_id: sorted(m.types) for m in lab.entity_mentions}
    fs = featurize_corpus(lab, small_synth.train, entity_types=inject)
    assert any(s.startswith("ETYPE_EM1_") for s in fs.relation_dict.strings)
    assert not any(s.startswith("ETYPE_") for s in small_run.features.relation_dict.strings)
