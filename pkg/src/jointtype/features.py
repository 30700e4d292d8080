"""Lexical feature templates for relation and entity mentions, feature
dictionaries and weighted mention-feature edges."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, Sentence, window

logger = logging.getLogger(__name__)

BROWN_PREFIXES = (4, 8)


class FeatureError(ValueError):
    pass


def load_brown(path) -> dict[str, str]:
    """Token -> cluster bit string from ``token<TAB>bitstring`` lines."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise FeatureError(f"{path}:{lineno}: expected token<TAB>bitstring")
            out[cols[0]] = cols[1]
    return out


def _brown(tokens, brown: dict | None) -> list[str]:
    if not brown:
        return []
    feats = []
    for t in tokens:
        bits = brown.get(t.text)
        if bits:
            feats.extend(f"{k}_{bits[:k]}" for k in BROWN_PREFIXES)
    return feats


def word_shape(word: str) -> str:
    return "".join("A" if c.isupper() else "a" if c.islower() else "0" if c.isdigit() else c
                   for c in word)


def _bigrams(words: Sequence[str]) -> list[str]:
    return [f"{a} {b}" for a, b in zip(words, words[1:])]


def extract_relation_features(sentence: Sentence, em1: tuple[int, int], em2: tuple[int, int],
                              brown: dict | None = None, k: int = 3,
                              em1_types: Iterable[str] = (), em2_types: Iterable[str] = ()
                              ) -> list[str]:
    """Feature multiset of the relation mention (em1, em2) in ``sentence``."""
    toks = sentence.tokens
    (s1, e1), (s2, e2) = em1, em2
    feats = [f"HEAD_EM1_{toks[e1 - 1].text}", f"HEAD_EM2_{toks[e2 - 1].text}"]
    feats += [f"TKN_EM1_{t.text}" for t in toks[s1:e1]]
    feats += [f"TKN_EM2_{t.text}" for t in toks[s2:e2]]
    lo, hi = (e1, s2) if s1 < s2 else (e2, s1)
    between = toks[lo:hi] if hi > lo else ()
    feats += [t.text for t in between]
    feats += [t.pos for t in between]
    for s, e in (em1, em2):
        left, right = window(sentence, (s, e), k)
        feats += _bigrams([t.text for t in left] + [toks[s].text])
        feats += _bigrams([toks[e - 1].text] + [t.text for t in right])
        feats += [t.text for t in left] + [t.text for t in right]
    feats.append("EM1_BEFORE_EM2" if s1 < s2 else "EM2_BEFORE_EM1")
    feats.append(f"EM_DISTANCE_{max(hi - lo, 0)}")
    if s1 < s2 and [t.text.lower() for t in between] == ["in"]:
        feats.append("PATTERN_EM1_IN_EM2")
    else:
        feats.append("PATTERN_NULL")
    feats += _brown(toks[s1:e1], brown) + _brown(toks[s2:e2], brown)
    feats += [f"ETYPE_EM1_{t}" for t in sorted(em1_types)]
    feats += [f"ETYPE_EM2_{t}" for t in sorted(em2_types)]
    return feats


def extract_entity_features(sentence: Sentence, span: tuple[int, int], brown: dict | None = None,
                            k: int = 3) -> list[str]:
    toks = sentence.tokens
    s, e = span
    head = toks[e - 1]
    feats = [f"HEAD_{head.text}"]
    feats += [f"TKN_{t.text}" for t in toks[s:e]]
    left, right = window(sentence, span, k)
    lw, rw = [t.text for t in left], [t.text for t in right]
    feats += [f"CTX_{w}" for w in lw + rw]
    feats += [f"CTX_{b}" for b in _bigrams(lw) + _bigrams(rw)]
    feats.append(f"POS_{head.pos}")
    feats.append(f"LEN_{e - s}")
    feats.append(f"SHAPE_{word_shape(head.text)}")
    feats += _brown(toks[s:e], brown)
    return feats


# ---------------------------------------------------------------- dictionaries

@dataclass
class FeatureDictionary:
    strings: list[str]
    doc_freq: np.ndarray
    min_count: int
    index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.index = {s: i for i, s in enumerate(self.strings)}

    def __len__(self) -> int:
        return len(self.strings)

    def get(self, feature: str) -> int | None:
        return self.index.get(feature)

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, s in enumerate(self.strings):
                fh.write(f"{i}\t{s}\t{int(self.doc_freq[i])}\n")

    @classmethod
    def load(cls, path, min_count: int = 0) -> "FeatureDictionary":
        strings, df = [], []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.rstrip("\n")
                if not line:
                    continue
                cols = line.split("\t")
                if len(cols) != 3 or int(cols[0]) != len(strings):
                    raise FeatureError(f"{path}:{lineno}: bad dictionary line")
                strings.append(cols[1])
                df.append(int(cols[2]))
        return cls(strings, np.asarray(df, dtype=np.int64), min_count)


def build_dictionary(feature_lists: Iterable[Sequence[str]], min_count: int = 2) -> FeatureDictionary:
    """Keep features occurring at least ``min_count`` times; ids follow sorted order."""
    occ: Counter = Counter()
    df: Counter = Counter()
    for feats in feature_lists:
        occ.update(feats)
        df.update(set(feats))
    kept = sorted(f for f, c in occ.items() if c >= min_count)
    if not kept:
        raise FeatureError("feature dictionary is empty")
    return FeatureDictionary(kept, np.array([df[f] for f in kept], dtype=np.int64), min_count)


@dataclass
class EdgeList:
    rows: np.ndarray     # mention row
    feats: np.ndarray    # feature id
    weights: np.ndarray  # co-occurrence count
    empty: np.ndarray    # rows with no retained feature

    def __len__(self) -> int:
        return self.rows.size


def featurize(feature_lists: Sequence[Sequence[str]], dictionary: FeatureDictionary) -> EdgeList:
    rows, feats, weights, empty = [], [], [], []
    for r, fl in enumerate(feature_lists):
        c = Counter(i for i in (dictionary.get(f) for f in fl) if i is not None)
        if not c:
            empty.append(r)
            continue
        for fid in sorted(c):
            rows.append(r)
            feats.append(fid)
            weights.append(c[fid])
    return EdgeList(np.asarray(rows, dtype=np.int64), np.asarray(feats, dtype=np.int64),
                    np.asarray(weights, dtype=np.float64), np.asarray(empty, dtype=np.int64))


# ---------------------------------------------------------------- labelled corpus

@dataclass
class FeatureSet:
    relation_dict: FeatureDictionary
    entity_dict: FeatureDictionary
    relation_edges: EdgeList
    entity_edges: EdgeList
    relation_ids: list[str]
    entity_ids: list[str]


def relation_feature_lists(relation_mentions, corpus: Corpus, brown=None, k: int = 3,
                           entity_types: dict | None = None) -> list[list[str]]:
    """``entity_types`` maps an entity mention id to types injected as extra features."""
    out = []
    for z in relation_mentions:
        s = corpus.sentence(*z.sentence_key)
        t1 = t2 = ()
        if entity_types is not None:
            t1 = entity_types.get(z.em1.mention_id, ())
            t2 = entity_types.get(z.em2.mention_id, ())
        out.append(extract_relation_features(s, z.em1.span, z.em2.span, brown, k, t1, t2))
    return out


def entity_feature_lists(entity_mentions, corpus: Corpus, brown=None, k: int = 3) -> list[list[str]]:
    return [extract_entity_features(corpus.sentence(*m.sentence_key), m.span, brown, k)
            for m in entity_mentions]


def build_dictionaries(labeled, corpus: Corpus, min_count: int = 2, brown=None, k: int = 3
                       ) -> tuple[FeatureDictionary, FeatureDictionary]:
    """(relation dictionary, entity dictionary) over every training mention."""
    return (build_dictionary(relation_feature_lists(labeled.relation_mentions, corpus, brown, k),
                             min_count),
            build_dictionary(entity_feature_lists(labeled.entity_mentions, corpus, brown, k),
                             min_count))


def featurize_corpus(labeled, corpus: Corpus, min_count: int = 2, brown=None, k: int = 3,
                     entity_types: dict | None = None) -> FeatureSet:
    rel_lists = relation_feature_lists(labeled.relation_mentions, corpus, brown, k, entity_types)
    ent_lists = entity_feature_lists(labeled.entity_mentions, corpus, brown, k)
    rd = build_dictionary(rel_lists, min_count)
    ed = build_dictionary(ent_lists, min_count)
    re_, ee = featurize(rel_lists, rd), featurize(ent_lists, ed)
    if re_.empty.size or ee.empty.size:
        logger.warning("%d relation and %d entity mentions have no retained features",
                       re_.empty.size, ee.empty.size)
    return FeatureSet(rd, ed, re_, ee, [z.mention_id for z in labeled.relation_mentions],
                      [m.mention_id for m in labeled.entity_mentions])


def dump_edges(edges: EdgeList, ids: Sequence[str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r, f, w in zip(edges.rows.tolist(), edges.feats.tolist(), edges.weights.tolist()):
            fh.write(f"{ids[r]}\t{f}\t{int(w)}\n")


def load_edges(path, ids: Sequence[str]) -> EdgeList:
    pos = {m: i for i, m in enumerate(ids)}
    rows, feats, weights = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3 or cols[0] not in pos:
                raise FeatureError(f"{path}:{lineno}: bad edge line")
            rows.append(pos[cols[0]])
            feats.append(int(cols[1]))
            weights.append(float(cols[2]))
    seen = set(rows)
    empty = [i for i in range(len(ids)) if i not in seen]
    return EdgeList(np.asarray(rows, dtype=np.int64), np.asarray(feats, dtype=np.int64),
                    np.asarray(weights, dtype=np.float64), np.asarray(empty, dtype=np.int64))
