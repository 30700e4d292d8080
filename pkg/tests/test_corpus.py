import pytest

from jointtype.corpus import (Corpus, CorpusFormatError, format_corpus, load_corpus,
                              parse_corpus, window)

from conftest import corpus_text


def test_counts(toy_corpus):
    assert toy_corpus.n_sentences == 3
    assert [s.sentence_index for s in toy_corpus.sentences()] == [0, 1, 2]
    assert toy_corpus.sentence("d1", 1).words[:2] == ("Barack", "Obama")
    assert sum(len(d.sentences) for d in toy_corpus.documents) == toy_corpus.n_sentences


def test_two_docs_three_sentences():
    text = corpus_text(["A/DT b/NN", "C/NNP"], "x") + corpus_text(["D/NNP"], "y")
    c = parse_corpus(text.splitlines())
    assert c.n_sentences == 3 and c.doc_ids() == {"x", "y"}


def test_missing_pos_column():
    with pytest.raises(CorpusFormatError, match=":2:"):
        parse_corpus(["-DOCSTART- d", "Obama", ""])


def test_blank_only():
    with pytest.raises(CorpusFormatError, match="empty corpus"):
        parse_corpus(["", "", "\n"])


def test_empty_sentences_dropped():
    c = parse_corpus(["-DOCSTART- d", "", "", "a\tDT", "", "", "b\tNN"])
    assert c.n_sentences == 2 and c.dropped_empty == 3


def test_round_trip_bytes(tmp_path):
    text = corpus_text()
    p = tmp_path / "c.conll"
    p.write_text(text, encoding="utf-8")
    assert format_corpus(load_corpus(p)) == text


def test_duplicate_sentence_ids():
    c = parse_corpus(corpus_text().splitlines())
    with pytest.raises(CorpusFormatError, match="duplicate"):
        Corpus.concat([c, c])


def test_window(toy_corpus):
    s = toy_corpus.sentence("d1", 0)          # 17 tokens
    left, right = window(s, (0, 1), 3)
    assert left == [] and [t.text for t in right] == ["native", "Barack", "Obama"]
    left, right = window(s, (5, 6), 3)
    assert (len(left), len(right)) == (3, 3)
    assert window(s, (5, 6), 0) == ([], [])
    left, right = window(s, (15, 17), 3)
    assert right == []
    with pytest.raises(IndexError):
        window(s, (16, 18))
