"""End-to-end composition of the stages: segment, label, featurize, train,
predict and score."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .config import RunConfig
from .corpus import Corpus
from .embedder import TrainResult, build_graph, train
from .evaluation import GoldAnnotation, MetricsReport, evaluate_predictions
from .features import FeatureSet, featurize_corpus, load_brown
from .inference import Predictions, batch_predict
from .kb import KnowledgeBase
from .labeler import LabeledCorpus, build_labeled_corpus
from .segmenter import MentionSpan, SegmentationResult, run_segmentation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _Span:
    doc_id: str
    sentence_index: int
    start: int
    end: int


def gold_mentions(gold: GoldAnnotation) -> list[_Span]:
    return [_Span(*k) for k in sorted(gold.entities)]


@dataclass
class PipelineResult:
    segmentation: SegmentationResult
    labeled: LabeledCorpus
    features: FeatureSet
    training: TrainResult
    detected: Predictions                   # on mentions found by the segmenter
    on_gold: Predictions | None = None      # on gold mentions (typing / classification)
    metrics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    train_docs: frozenset = frozenset()

    @property
    def test_mentions(self) -> list[MentionSpan]:
        return [m for m in self.segmentation.mentions if m.doc_id not in self.train_docs]


def run_pipeline(train_corpus: Corpus, test_corpus: Corpus, kb: KnowledgeBase,
                 config: RunConfig | None = None, gold: GoldAnnotation | None = None
                 ) -> PipelineResult:
    """Run every stage in memory.

    Segmentation sees the training and test text together (it is unsupervised
    apart from the KB seeds); labelling and training only use training
    documents. With ``gold`` the result also carries predictions on gold
    mentions and two metric reports: ``classification`` (gold mentions given)
    and ``end_to_end`` (detected mentions).
    """
    config = config or RunConfig()
    config.validate()
    brown = load_brown(config.features.brown_path) if config.features.brown_path else None
    k = config.features.window
    timings = {}

    t = time.perf_counter()
    overlap = train_corpus.doc_ids() & test_corpus.doc_ids()
    if overlap:
        raise ValueError(f"{len(overlap)} document id(s) appear in both train and test corpora")
    seg = run_segmentation(Corpus.concat([train_corpus, test_corpus]), kb, config.segmenter)
    timings["segment"] = time.perf_counter() - t

    t = time.perf_counter()
    train_docs = frozenset(train_corpus.doc_ids())
    train_mentions = [m for m in seg.mentions if m.doc_id in train_docs]
    test_mentions = [m for m in seg.mentions if m.doc_id not in train_docs]
    labeled = build_labeled_corpus(train_mentions, train_corpus, kb, config.labeler)
    timings["label"] = time.perf_counter() - t

    t = time.perf_counter()
    fs = featurize_corpus(labeled, train_corpus, config.features.min_count, brown, k)
    graph = build_graph(labeled, fs, kb.hierarchy, config.train.noise_power)
    timings["featurize"] = time.perf_counter() - t

    result = train(graph, config.train)
    timings["train"] = result.seconds

    t = time.perf_counter()
    detected = batch_predict(test_corpus, test_mentions, result.model, kb.hierarchy,
                             config.inference, brown, k)
    on_gold = None
    metrics: dict[str, MetricsReport] = {}
    if gold is not None:
        on_gold = batch_predict(test_corpus, gold_mentions(gold), result.model, kb.hierarchy,
                                config.inference, brown, k)
        metrics["classification"] = evaluate_predictions(gold, on_gold)
        metrics["end_to_end"] = evaluate_predictions(gold, detected)
    timings["predict"] = time.perf_counter() - t
    logger.info("pipeline timings: %s", {a: round(b, 2) for a, b in timings.items()})
    return PipelineResult(seg, labeled, fs, result, detected, on_gold, metrics, timings, train_docs)
