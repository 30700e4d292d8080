"""Quality-guided corpus segmentation for entity-mention detection.

Frequent word and POS n-grams are mined, two random forests learn phrase
quality from KB alias matches, and a Viterbi-training loop alternates between
segmenting every sentence and re-estimating the segment priors.
"""

from __future__ import annotations

import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from . import kernels
from .corpus import Corpus, Sentence
from .kb import KnowledgeBase

logger = logging.getLogger(__name__)

NOUN_TAGS = frozenset({"NN", "NNS", "NNP", "NNPS"})
STOPWORDS = frozenset("""
a an the of in on at to for from by with about as into over after before under between
and or but nor so yet if then than that this these those is are was were be been being
am has have had do does did will would shall should can could may might must it its
he she they we you i his her their our your my me him them us who whom which what
when where why how not no all any each some such very just also there here
""".split())
FEATURE_SCHEMA = 1


class SegmenterError(ValueError):
    pass


@dataclass
class SegmenterConfig:
    max_len: int = 6
    min_support: int = 3
    negative_ratio: float = 2.0
    min_examples: int = 20
    q_min: float = 0.5
    seg_tol: float = 1e-3
    max_rounds: int = 5
    eps_unseen: float = 1e-6
    n_trees: int = 100
    max_depth: int = 8
    seed: int = 0


@dataclass(frozen=True, order=True)
class MentionSpan:
    doc_id: str
    sentence_index: int
    start: int
    end: int
    surface: str = field(compare=False)

    @property
    def sentence_key(self) -> tuple[str, int]:
        return (self.doc_id, self.sentence_index)

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


# ---------------------------------------------------------------- patterns

@dataclass
class PatternTable:
    max_len: int
    min_support: int
    words: dict[tuple[str, ...], int]
    pos: dict[tuple[str, ...], int]
    length_totals: list[int]
    unigrams: Counter
    doc_freq: Counter
    n_sentences: int
    n_tokens: int

    def count(self, gram: tuple[str, ...]) -> int:
        if len(gram) == 1:
            return self.unigrams.get(gram[0], 0)
        return self.words.get(gram, 0)


def _mine(seqs: Sequence[tuple[str, ...]], max_len: int, min_support: int):
    kept_all: dict[tuple[str, ...], int] = {}
    totals = []
    prev: dict | None = None
    full_unigrams: Counter = Counter()
    for n in range(1, max_len + 1):
        cnt: Counter = Counter()
        for s in seqs:
            m = len(s) - n + 1
            if m <= 0:
                continue
            if n == 1:
                cnt.update((w,) for w in s)
                continue
            # a frequent n-gram needs both of its (n-1)-gram halves frequent
            for i in range(m):
                g = s[i:i + n]
                if g[:-1] in prev and g[1:] in prev:
                    cnt[g] += 1
        totals.append(sum(max(0, len(s) - n + 1) for s in seqs))
        if n == 1:
            full_unigrams = Counter({g[0]: c for g, c in cnt.items()})
        prev = {g: c for g, c in cnt.items() if c >= min_support}
        kept_all.update(prev)
    return kept_all, totals, full_unigrams


def mine_patterns(corpus: Corpus, max_len: int = 6, min_support: int = 3) -> PatternTable:
    if max_len < 1 or min_support < 1:
        raise ValueError("max_len and min_support must be >= 1")
    sents = list(corpus.sentences())
    words = [s.words for s in sents]
    tags = [s.tags for s in sents]
    wkept, totals, unigrams = _mine(words, max_len, min_support)
    pkept, _, _ = _mine(tags, max_len, min_support)
    df: Counter = Counter()
    for w in words:
        df.update(set(w))
    table = PatternTable(max_len, min_support, wkept, pkept, totals, unigrams, df,
                         len(sents), sum(len(w) for w in words))
    logger.info("mined %d word and %d POS patterns (max_len=%d, min_support=%d)",
                len(wkept), len(pkept), max_len, min_support)
    return table


# ---------------------------------------------------------------- quality

@dataclass
class QualityExamples:
    phrases: list[tuple[str, ...]]
    phrase_labels: np.ndarray
    pos_patterns: list[tuple[str, ...]]
    pos_labels: np.ndarray
    pos_positive: Counter  # POS pattern -> occurrences whose words are a KB alias


def _is_stop(w: str) -> bool:
    return w.lower() in STOPWORDS or not any(ch.isalnum() for ch in w)


def _surface(words: Iterable[str]) -> str:
    return " ".join(words)


def build_quality_examples(patterns: PatternTable, kb: KnowledgeBase, corpus: Corpus,
                           negative_ratio: float = 2.0, seed: int = 0) -> QualityExamples:
    """Label mined word patterns by KB alias match and sample negatives."""
    pos_set, neg_pool = set(), []
    for g in patterns.words:
        if kb.lookup_alias(_surface(g)):
            pos_set.add(g)
        else:
            neg_pool.append(g)
    if not pos_set:
        raise SegmenterError("KB provides no supervision for this corpus")
    neg_pool.sort()
    k = min(len(neg_pool), int(round(negative_ratio * len(pos_set))))
    negs = random.Random(seed).sample(neg_pool, k)
    phrases = sorted(pos_set) + negs
    labels = np.array([1] * len(pos_set) + [0] * len(negs), dtype=np.int64)

    # dominant POS sequence of every example, and POS patterns of alias matches
    wanted = set(phrases)
    lengths = sorted({len(g) for g in wanted})
    tag_seen: dict[tuple[str, ...], Counter] = {g: Counter() for g in wanted}
    pos_positive: Counter = Counter()
    for s in corpus.sentences():
        w, t = s.words, s.tags
        for n in lengths:
            for i in range(len(w) - n + 1):
                g = w[i:i + n]
                if g in wanted:
                    tg = t[i:i + n]
                    tag_seen[g][tg] += 1
                    if g in pos_set:
                        pos_positive[tg] += 1
    pos_patterns = []
    for g in phrases:
        c = tag_seen[g]
        pos_patterns.append(min(c, key=lambda x: (-c[x], x)) if c else ("UNK",) * len(g))
    return QualityExamples(phrases, labels, pos_patterns, labels.copy(), pos_positive)


class QualityModel:
    """Phrase and POS-pattern forests plus the statistics their features need."""

    def __init__(self, patterns: PatternTable, pos_positive: Counter, phrase_clf, pos_clf,
                 counts: dict | None = None) -> None:
        self.patterns = patterns
        self.pos_positive = pos_positive
        self.phrase_clf = phrase_clf
        self.pos_clf = pos_clf
        self.counts = counts  # rectified counts; None means raw counts
        self.schema = FEATURE_SCHEMA
        self.train_accuracy: dict[str, float] = {}

    def _count(self, g: tuple[str, ...]) -> float:
        if self.counts is None or len(g) == 1:
            return float(self.patterns.count(g))
        return float(self.counts.get(g, 0))

    def phrase_features(self, phrases: Sequence[tuple[str, ...]]) -> np.ndarray:
        pt = self.patterns
        n_tok = max(pt.n_tokens, 1)
        n_sent = max(pt.n_sentences, 1)
        out = np.zeros((len(phrases), 6))
        for r, g in enumerate(phrases):
            c = self._count(g)
            out[r, 0] = math.log1p(c)
            if len(g) > 1:
                pc = max(c, 0.5) / n_tok
                best = -1.0
                for k in range(1, len(g)):
                    pa = max(pt.count(g[:k]), 0.5) / n_tok
                    pb = max(pt.count(g[k:]), 0.5) / n_tok
                    denom = -math.log(pc)
                    npmi = math.log(pc / (pa * pb)) / denom if denom > 0 else 1.0
                    best = max(best, npmi)
                out[r, 1] = best if c > 0 else -1.0
                indep = sum(math.log(max(pt.unigrams.get(w, 0), 0.5) / n_tok) for w in g)
                out[r, 2] = math.log(pc) - indep
            out[r, 3] = float(_is_stop(g[0]) or _is_stop(g[-1]))
            out[r, 4] = sum(math.log(n_sent / max(pt.doc_freq.get(w, 0), 1)) for w in g) / len(g)
            out[r, 5] = sum(w[:1].isupper() for w in g) / len(g)
        return out

    def pos_features(self, tag_seqs: Sequence[tuple[str, ...]]) -> np.ndarray:
        out = np.zeros((len(tag_seqs), 3))
        for r, t in enumerate(tag_seqs):
            n = self.patterns.pos.get(t, 0)
            out[r, 0] = math.log1p(n)
            out[r, 1] = self.pos_positive.get(t, 0) / n if n else 0.0
            out[r, 2] = len(t)
        return out

    def phrase_scores(self, phrases: Sequence[tuple[str, ...]]) -> np.ndarray:
        if not phrases:
            return np.zeros(0)
        return self.phrase_clf.predict_proba(self.phrase_features(phrases))[:, 1]

    def pos_scores(self, tag_seqs: Sequence[tuple[str, ...]]) -> np.ndarray:
        if not tag_seqs:
            return np.zeros(0)
        return self.pos_clf.predict_proba(self.pos_features(tag_seqs))[:, 1]


def _forest(config: SegmenterConfig) -> RandomForestClassifier:
    return RandomForestClassifier(n_estimators=config.n_trees, max_depth=config.max_depth,
                                  random_state=config.seed, n_jobs=1)


def train_quality_models(examples: QualityExamples, patterns: PatternTable,
                         config: SegmenterConfig | None = None, counts: dict | None = None
                         ) -> QualityModel:
    config = config or SegmenterConfig()
    y = examples.phrase_labels
    if len(set(y.tolist())) < 2:
        raise SegmenterError("single class in quality training examples")
    if int(y.sum()) < config.min_examples:
        raise SegmenterError(f"only {int(y.sum())} positive examples (need {config.min_examples})")
    model = QualityModel(patterns, examples.pos_positive, _forest(config), _forest(config), counts)
    X = model.phrase_features(examples.phrases)
    model.phrase_clf.fit(X, y)
    Xp = model.pos_features(examples.pos_patterns)
    model.pos_clf.fit(Xp, examples.pos_labels)
    model.train_accuracy = {
        "phrase": float(model.phrase_clf.score(X, y)),
        "pos": float(model.pos_clf.score(Xp, examples.pos_labels)),
    }
    logger.info("quality models trained: %s", model.train_accuracy)
    return model


def combine_quality(phrase_score, pos_score):
    """Q(c): equal-weight mix of the two classifier scores."""
    return 0.5 * phrase_score + 0.5 * pos_score


def segment_quality(words: Sequence[str], tags: Sequence[str], model: QualityModel) -> float:
    ps = model.phrase_scores([tuple(words)])[0]
    qs = model.pos_scores([tuple(tags)])[0]
    return float(combine_quality(ps, qs))


# ---------------------------------------------------------------- priors / DP

@dataclass
class SegmentPriors:
    max_len: int
    length: np.ndarray  # p(l) for l = 1..max_len at index l-1
    cond: dict[tuple[str, ...], float]
    eps: float = 1e-6

    def log_length(self) -> np.ndarray:
        return np.log(np.maximum(self.length, self.eps))

    def log_cond(self, gram: tuple[str, ...]) -> float:
        return math.log(max(self.cond.get(gram, 0.0), self.eps))

    def log_prior(self) -> float:
        """Log-density of the add-one (Dirichlet) prior on p(l), up to a constant."""
        return float(np.sum(self.log_length()))


def initial_priors(patterns: PatternTable, eps: float = 1e-6,
                   seeds: Iterable[tuple[str, ...]] = ()) -> SegmentPriors:
    """Starting point for Viterbi training.

    p(c|l) comes from raw n-gram frequencies. p(l) is the add-one length
    histogram of a seed segmentation in which every occurrence of a ``seeds``
    pattern (the KB alias matches) is one segment and all other tokens are
    unigrams; with no seeds it is uniform.
    """
    L = patterns.max_len
    cond: dict[tuple[str, ...], float] = {}
    tot = patterns.length_totals
    for w, c in patterns.unigrams.items():
        cond[(w,)] = c / tot[0]
    for g, c in patterns.words.items():
        if len(g) > 1 and tot[len(g) - 1]:
            cond[g] = c / tot[len(g) - 1]
    by_len = np.zeros(L)
    covered = 0
    for g in seeds:
        if 1 < len(g) <= L:
            c = patterns.words.get(g, 0)
            by_len[len(g) - 1] += c
            covered += c * len(g)
    if not by_len.any():
        return SegmentPriors(L, np.full(L, 1.0 / L), cond, eps)
    by_len[0] = max(patterns.n_tokens - covered, 0)
    return SegmentPriors(L, (by_len + 1.0) / (by_len.sum() + L), cond, eps)


def estimate_priors(segments: Iterable[tuple[str, ...]], max_len: int, eps: float = 1e-6
                    ) -> SegmentPriors:
    """Histogram estimate: add-one smoothed p(l) and p(c|l) with eps reserved for unseen c."""
    by_len = np.zeros(max_len)
    counts: Counter = Counter(segments)
    for g, c in counts.items():
        by_len[len(g) - 1] += c
    n = by_len.sum()
    length = (by_len + 1.0) / (n + max_len)
    cond = {g: (1.0 - eps) * c / by_len[len(g) - 1] for g, c in counts.items()}
    return SegmentPriors(max_len, length, cond, eps)


@dataclass
class Segmentation:
    sentence_key: tuple[str, int]
    boundaries: tuple[int, ...]

    @property
    def spans(self) -> list[tuple[int, int]]:
        b = self.boundaries
        return [(b[i], b[i + 1]) for i in range(len(b) - 1)]


def segment_scores(words: Sequence[str], tags: Sequence[str], priors: SegmentPriors,
                   quality) -> np.ndarray:
    """Score matrix [n, max_len]: log p(l) + log p(c|l) + log Q(c), floored at log eps.

    ``quality(words, tags)`` gives Q for a multi-token segment; single tokens use Q=1.
    """
    n, L = len(words), priors.max_len
    lf = math.log(priors.eps)
    ll = priors.log_length()
    out = np.full((n, L), -1e300)
    for i in range(n):
        for l in range(1, min(L, n - i) + 1):
            g = tuple(words[i:i + l])
            q = 1.0 if l == 1 else quality(g, tuple(tags[i:i + l]))
            lq = max(math.log(q), lf) if q > 0 else lf
            out[i, l - 1] = ll[l - 1] + priors.log_cond(g) + lq
    return out


def segment_sentence(sentence: Sentence, quality, priors: SegmentPriors) -> tuple[Segmentation, float]:
    scores = segment_scores(sentence.words, sentence.tags, priors, quality)
    total, lengths, _ = kernels.viterbi_batch(scores, np.array([0, len(sentence)], dtype=np.int64))
    b = [0]
    for l in lengths:
        b.append(b[-1] + int(l))
    return Segmentation(sentence.key, tuple(b)), float(total[0])


def best_segmentation_bruteforce(scores: np.ndarray) -> tuple[float, tuple[int, ...]]:
    """Exhaustive oracle over all 2^(n-1) boundary sets, same tie rule as the DP."""
    n, L = scores.shape
    best = None
    for mask in range(1 << max(n - 1, 0)):
        b = [0] + [i + 1 for i in range(n - 1) if mask >> i & 1] + [n]
        lens = [b[i + 1] - b[i] for i in range(len(b) - 1)]
        if max(lens) > L:
            continue
        total = 0.0
        # sum right-to-left to match the DP's accumulation order
        for i in range(len(lens) - 1, -1, -1):
            total = scores[b[i], lens[i] - 1] + total
        key = (total, -len(lens), tuple(lens))
        if best is None or key > best[0]:
            best = (key, tuple(b))
    return best[0][0], best[1]


# ---------------------------------------------------------------- corpus loop

class _Lattice:
    """Every candidate segment of the corpus, indexed for vectorised rescoring."""

    def __init__(self, sentences: list[Sentence], patterns: PatternTable) -> None:
        L = patterns.max_len
        self.sentences = sentences
        self.L = L
        self.offsets = np.zeros(len(sentences) + 1, dtype=np.int64)
        rows = sum(len(s) for s in sentences)
        self.wid = np.full((rows, L), -1, dtype=np.int64)
        self.tid = np.full((rows, L), -1, dtype=np.int64)
        wkeys: dict[tuple[str, ...], int] = {}
        tkeys: dict[tuple[str, ...], int] = {}
        r = 0
        for si, s in enumerate(sentences):
            self.offsets[si] = r
            w, t = s.words, s.tags
            n = len(w)
            for i in range(n):
                for l in range(1, min(L, n - i) + 1):
                    g = w[i:i + l]
                    if l > 1 and g not in patterns.words:
                        break
                    self.wid[r + i, l - 1] = wkeys.setdefault(g, len(wkeys))
                    self.tid[r + i, l - 1] = tkeys.setdefault(t[i:i + l], len(tkeys))
            r += n
        self.offsets[-1] = r
        self.wkeys = list(wkeys)
        self.tkeys = list(tkeys)
        self.wlen = np.array([len(g) for g in self.wkeys], dtype=np.int64)

    def scores(self, priors: SegmentPriors, phrase: np.ndarray, pos: np.ndarray) -> np.ndarray:
        lf = math.log(priors.eps)
        ll = priors.log_length()
        log_c = np.array([priors.log_cond(g) for g in self.wkeys])
        out = ll[None, :] + 2 * lf + np.zeros((self.wid.shape[0], 1))
        has = self.wid >= 0
        w = self.wid[has]
        t = self.tid[has]
        q = combine_quality(phrase[w], pos[t])
        lq = np.where(self.wlen[w] == 1, 0.0, np.log(np.maximum(q, priors.eps)))
        cols = np.nonzero(has)[1]
        out[has] = ll[cols] + log_c[w] + lq
        return out

    def decode(self, scores: np.ndarray):
        totals, lengths, seg_off = kernels.viterbi_batch(np.ascontiguousarray(scores), self.offsets)
        return totals, lengths, seg_off


@dataclass
class SegmentationResult:
    mentions: list[MentionSpan]
    segmentations: dict[tuple[str, int], Segmentation]
    priors: SegmentPriors
    model: QualityModel
    trace: list[float]
    rounds: int


def _segments_of(lat: _Lattice, lengths, seg_off):
    """Yield (sentence, start, length, wid) for every decoded segment."""
    for si, s in enumerate(lat.sentences):
        pos = 0
        row0 = lat.offsets[si]
        for k in range(seg_off[si], seg_off[si + 1]):
            l = int(lengths[k])
            yield si, pos, l, int(lat.wid[row0 + pos, l - 1])
            pos += l


def viterbi_training(lat: _Lattice, phrase: np.ndarray, pos: np.ndarray, priors: SegmentPriors,
                     rounds: int, tol: float = 0.0):
    """Alternate best segmentation and prior re-estimation under fixed quality scores.

    Returns ``(lengths, seg_off, priors, trace)``. ``trace`` holds the penalised
    log-likelihood (DP total plus the add-one prior's log-density), which cannot
    decrease from one round to the next.
    """
    trace: list[float] = []
    lengths = seg_off = None
    for _ in range(rounds):
        totals, lengths, seg_off = lat.decode(lat.scores(priors, phrase, pos))
        trace.append(float(totals.sum()) + priors.log_prior())
        segs = []
        for si, start, l, wid in _segments_of(lat, lengths, seg_off):
            segs.append(lat.wkeys[wid] if wid >= 0 else lat.sentences[si].words[start:start + l])
        priors = estimate_priors(segs, lat.L, priors.eps)
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) <= tol * abs(trace[-2]):
            break
    return lengths, seg_off, priors, trace


def run_segmentation(corpus: Corpus, kb: KnowledgeBase, config: SegmenterConfig | None = None
                     ) -> SegmentationResult:
    config = config or SegmenterConfig()
    patterns = mine_patterns(corpus, config.max_len, config.min_support)
    examples = build_quality_examples(patterns, kb, corpus, config.negative_ratio, config.seed)
    sentences = list(corpus.sentences())
    lat = _Lattice(sentences, patterns)
    seeds = [g for g, y in zip(examples.phrases, examples.phrase_labels) if y == 1]
    priors = initial_priors(patterns, config.eps_unseen, seeds)
    counts = None
    trace: list[float] = []
    model = None
    lengths = seg_off = None
    phrase = pos = None
    for rnd in range(config.max_rounds):
        model = train_quality_models(examples, patterns, config, counts)
        phrase = model.phrase_scores(lat.wkeys)
        pos = model.pos_scores(lat.tkeys)
        totals, lengths, seg_off = lat.decode(lat.scores(priors, phrase, pos))
        trace.append(float(totals.sum()) + priors.log_prior())
        logger.info("segmentation round %d: penalised log-likelihood %.6g", rnd, trace[-1])
        segs = []
        rect: Counter = Counter()
        for si, start, l, wid in _segments_of(lat, lengths, seg_off):
            g = lat.wkeys[wid] if wid >= 0 else sentences[si].words[start:start + l]
            segs.append(g)
            if l > 1:
                rect[g] += 1
        priors = estimate_priors(segs, config.max_len, config.eps_unseen)
        # rectified counts: occurrences as whole segments only
        counts = {g: rect.get(g, 0) for g in patterns.words if len(g) > 1}
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < config.seg_tol * abs(trace[-2]):
            break

    mentions: list[MentionSpan] = []
    segmentations: dict[tuple[str, int], Segmentation] = {}
    bounds: dict[int, list[int]] = {}
    for si, start, l, wid in _segments_of(lat, lengths, seg_off):
        s = sentences[si]
        bounds.setdefault(si, [0]).append(start + l)
        if l == 1:
            tid = int(lat.tid[lat.offsets[si] + start, 0])
            q = combine_quality(phrase[wid], pos[tid])
            if q < config.q_min or s.tokens[start].pos not in NOUN_TAGS:
                continue
        mentions.append(MentionSpan(s.doc_id, s.sentence_index, start, start + l,
                                    _surface(s.words[start:start + l])))
    for si, s in enumerate(sentences):
        segmentations[s.key] = Segmentation(s.key, tuple(bounds.get(si, [0])))
    logger.info("segmentation produced %d mentions in %d rounds", len(mentions), len(trace))
    return SegmentationResult(mentions, segmentations, priors, model, trace, len(trace))


# ---------------------------------------------------------------- I/O

def dump_mentions(mentions: Iterable[MentionSpan], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in mentions:
            fh.write(f"{m.doc_id}\t{m.sentence_index}\t{m.start}\t{m.end}\t{m.surface}\n")


def load_mentions(path) -> list[MentionSpan]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns, got {len(cols)}")
            out.append(MentionSpan(cols[0], int(cols[1]), int(cols[2]), int(cols[3]), cols[4]))
    return out
