"""Scoring for entity typing, relation classification and end-to-end relation
extraction, plus the entity-type error-propagation study.

Entity typing follows the Ling & Weld protocol with exact span matching:

* strict: a mention counts only if its predicted type set equals the gold set;
* macro: precision averaged over predicted mentions, recall over gold mentions,
  both of the per-mention type overlap;
* micro: precision and recall of the pooled (mention, type) assignments.

A mention is predicted when its type set is non-empty. Precision over an
empty prediction set is reported as 1 (the usual curve convention).
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .kb import NONE_TYPE, TypeHierarchy
from .synthetic import GoldSentence, SyntheticConfig, SyntheticDataset, generate_synthetic, load_gold

logger = logging.getLogger(__name__)

__all__ = [
    "EvaluationError", "GoldAnnotation", "TypingScores", "PRF", "MetricsReport",
    "entity_typing_scores", "relation_classification_accuracy", "relation_extraction_prf",
    "default_thresholds", "error_propagation_study", "generate_synthetic", "SyntheticConfig",
    "SyntheticDataset",
]

EntityKey = tuple  # (doc_id, sentence_index, start, end)
RelationKey = tuple  # (doc_id, sentence_index, s1, e1, s2, e2)


class EvaluationError(ValueError):
    pass


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _ratio(num: float, den: float, empty: float) -> float:
    return num / den if den else empty


# ---------------------------------------------------------------- gold

@dataclass
class GoldAnnotation:
    entities: dict = field(default_factory=dict)    # EntityKey -> tuple of types
    relations: dict = field(default_factory=dict)   # RelationKey -> label or None

    @classmethod
    def from_sentences(cls, sentences: Iterable[GoldSentence]) -> "GoldAnnotation":
        out = cls()
        for g in sentences:
            for e in g.entities:
                out.entities[(g.doc_id, g.sentence_index, *e["span"])] = tuple(e["types"])
            for r in g.relations:
                out.relations[(g.doc_id, g.sentence_index, *r["em1"], *r["em2"])] = r["label"]
        return out

    def validate(self, hierarchy: TypeHierarchy | None = None) -> None:
        for k, types in self.entities.items():
            if not k[2] < k[3]:
                raise EvaluationError(f"gold entity {k}: empty span")
            if hierarchy is not None and types and not hierarchy.is_chain(list(types)):
                raise EvaluationError(f"gold entity {k}: types {types} do not form a path")
        for k in self.relations:
            if not (k[2] < k[3] and k[4] < k[5]):
                raise EvaluationError(f"gold relation {k}: empty span")

    def dump(self, path) -> None:
        """JSON lines in the prediction schema."""
        with open(path, "w", encoding="utf-8") as fh:
            for k in sorted(self.entities):
                fh.write(json.dumps({"kind": "entity", "doc_id": k[0], "sentence_index": k[1],
                                     "span": [k[2], k[3]], "types": list(self.entities[k])},
                                    sort_keys=True) + "\n")
            for k in sorted(self.relations):
                fh.write(json.dumps({"kind": "relation", "doc_id": k[0], "sentence_index": k[1],
                                     "em1": [k[2], k[3]], "em2": [k[4], k[5]],
                                     "relation": self.relations[k]}, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "GoldAnnotation":
        """Read either the prediction schema or per-sentence gold records."""
        with open(path, encoding="utf-8") as fh:
            first = next((ln for ln in fh if ln.strip()), None)
        if first is None:
            raise EvaluationError(f"{path}: gold file is empty")
        if "kind" not in json.loads(first):
            return cls.from_sentences(load_gold(path))
        out = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                    if d["kind"] == "entity":
                        out.entities[(d["doc_id"], d["sentence_index"], *d["span"])] = \
                            tuple(d["types"] or ())
                    else:
                        out.relations[(d["doc_id"], d["sentence_index"], *d["em1"], *d["em2"])] = \
                            d["relation"]
                except (KeyError, TypeError, ValueError) as exc:
                    raise EvaluationError(f"{path}:{lineno}: bad gold record ({exc})") from None
        return out


# ---------------------------------------------------------------- entity typing

@dataclass
class TypingScores:
    strict: float
    macro: float
    micro: float
    strict_p: float
    strict_r: float
    macro_p: float
    macro_r: float
    micro_p: float
    micro_r: float
    n_gold: int
    n_pred: int
    per_type: dict = field(default_factory=dict)


def entity_typing_scores(gold: Mapping, predicted: Mapping) -> TypingScores:
    """Strict, macro and micro F1 of predicted type sets against gold.

    Both maps go from a mention key (spans included) to an iterable of
    types. Gold mentions missing from ``predicted`` count as untyped; predicted
    keys absent from gold are spurious mentions.
    """
    gold = {k: set(v) for k, v in gold.items() if v}
    if not gold:
        raise EvaluationError("no gold entity mentions to score against")
    pred = {k: set(v) for k, v in predicted.items() if v}

    exact = sum(1 for k, t in pred.items() if gold.get(k) == t)
    strict_p = _ratio(exact, len(pred), 1.0)
    strict_r = exact / len(gold)

    macro_p = _ratio(sum(len(t & gold.get(k, set())) / len(t) for k, t in pred.items()),
                     len(pred), 1.0)
    macro_r = sum(len(t & pred.get(k, set())) / len(t) for k, t in gold.items()) / len(gold)

    tp: Counter = Counter()
    fp: Counter = Counter()
    fn: Counter = Counter()
    for k, t in pred.items():
        g = gold.get(k, set())
        for y in t:
            (tp if y in g else fp)[y] += 1
    for k, t in gold.items():
        p = pred.get(k, set())
        for y in t - p:
            fn[y] += 1
    TP, FP, FN = sum(tp.values()), sum(fp.values()), sum(fn.values())
    micro_p = _ratio(TP, TP + FP, 1.0)
    micro_r = _ratio(TP, TP + FN, 0.0)

    per_type = {}
    for y in sorted(set(tp) | set(fp) | set(fn)):
        p = _ratio(tp[y], tp[y] + fp[y], 1.0)
        r = _ratio(tp[y], tp[y] + fn[y], 0.0)
        per_type[y] = {"tp": tp[y], "fp": fp[y], "fn": fn[y], "precision": p, "recall": r,
                       "f1": _f1(p, r)}
    return TypingScores(_f1(strict_p, strict_r), _f1(macro_p, macro_r), _f1(micro_p, micro_r),
                        strict_p, strict_r, macro_p, macro_r, micro_p, micro_r,
                        len(gold), len(pred), per_type)


# ---------------------------------------------------------------- relations

def relation_classification_accuracy(gold: Mapping, predicted: Mapping) -> float:
    """Share of gold relation mentions (None excluded) whose predicted type is exact."""
    keys = [k for k, v in gold.items() if v is not None and v != NONE_TYPE]
    if not keys:
        logger.warning("no gold relation mention with a target type; accuracy reported as 0")
        return 0.0
    return sum(predicted.get(k) == gold[k] for k in keys) / len(keys)


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float
    threshold: float | None = None
    curve: list = field(default_factory=list)   # (threshold, precision, recall)


def default_thresholds(step: float = 0.05) -> list[float]:
    """Cosine grid from -1 to 1 plus one point above 1 (nothing predicted)."""
    n = int(round(2 / step))
    return [round(-1 + i * step, 10) for i in range(n + 1)] + [round(1 + step, 10)]


def _prf_at(gold_pos: dict, pred: dict) -> tuple[int, int, int]:
    tp = sum(1 for k, y in pred.items() if gold_pos.get(k) == y)
    return tp, len(pred), len(gold_pos)


def relation_extraction_prf(gold: Mapping, predicted: Mapping,
                            thresholds: Sequence[float] | None = None) -> PRF:
    """Precision, recall and F1 of (span pair, type) predictions.

    ``predicted`` maps a relation key to a label, or to ``(label, score)``
    pairs when sweeping. With ``thresholds`` a prediction survives at
    threshold t when its score is at least t; the curve lists every point and
    the highest-F1 one is reported (lowest threshold on ties).
    """
    gold_pos = {k: v for k, v in gold.items() if v is not None and v != NONE_TYPE}

    def labels(thr):
        out = {}
        for k, v in predicted.items():
            lab, score = v if isinstance(v, tuple) else (v, math.inf)
            if lab is None or lab == NONE_TYPE:
                continue
            if thr is None or score >= thr:
                out[k] = lab
        return out

    def point(thr):
        tp, npred, ngold = _prf_at(gold_pos, labels(thr))
        return _ratio(tp, npred, 1.0), _ratio(tp, ngold, 0.0)

    if thresholds is None:
        p, r = point(None)
        return PRF(p, r, _f1(p, r))
    curve = []
    best = None
    for t in sorted(thresholds):
        p, r = point(t)
        curve.append((float(t), p, r))
        if best is None or _f1(p, r) > best[0]:
            best = (_f1(p, r), float(t), p, r)
    return PRF(best[2], best[3], best[0], best[1], curve)


# ---------------------------------------------------------------- report

@dataclass
class MetricsReport:
    strict_f1: float | None = None
    macro_f1: float | None = None
    micro_f1: float | None = None
    accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    threshold: float | None = None
    curve: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=lambda: [
        "entity mentions need an exact span match for credit",
        "precision is reported as 1 when nothing is predicted",
    ])

    def validate(self) -> None:
        for name in ("strict_f1", "macro_f1", "micro_f1", "accuracy", "precision", "recall", "f1"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise EvaluationError(f"{name}={v} outside [0, 1]")
        if None not in (self.precision, self.recall, self.f1):
            if abs(self.f1 - _f1(self.precision, self.recall)) > 1e-12:
                raise EvaluationError("f1 is not the harmonic mean of precision and recall")

    def summary(self) -> dict:
        return {k: v for k, v in asdict(self).items()
                if k not in ("curve", "details", "notes") and v is not None}

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)

    def to_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for note in self.notes:
                fh.write(f"# {note}\n")
            fh.write("metric\tvalue\n")
            for k, v in self.summary().items():
                fh.write(f"{k}\t{v:.6f}\n")

    def write_curve(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# precision is 1 when nothing is predicted\n")
            fh.write("threshold\tprecision\trecall\n")
            for t, p, r in self.curve:
                fh.write(f"{t:.4f}\t{p:.6f}\t{r:.6f}\n")


def evaluate_predictions(gold: GoldAnnotation, predictions, thresholds=None) -> MetricsReport:
    """All metrics for a :class:`~jointtype.inference.Predictions` object.

    Relation accuracy uses predictions on gold relation mentions; P/R/F1 and
    the curve use every predicted pair.
    """
    rep = MetricsReport()
    if gold.entities:
        ent = entity_typing_scores(gold.entities,
                                   {p.key: p.types or () for p in predictions.entities})
        rep.strict_f1, rep.macro_f1, rep.micro_f1 = ent.strict, ent.macro, ent.micro
        rep.details["entity"] = asdict(ent)
    if gold.relations:
        pred = {p.key: p.relation for p in predictions.relations}
        rep.accuracy = relation_classification_accuracy(gold.relations, pred)
        scored = {p.key: (p.nearest if p.nearest not in (None, NONE_TYPE) else None, p.score)
                  for p in predictions.relations}
        fixed = relation_extraction_prf(gold.relations, pred)
        sweep = relation_extraction_prf(gold.relations, scored,
                                        thresholds if thresholds is not None else default_thresholds())
        rep.precision, rep.recall, rep.f1 = fixed.precision, fixed.recall, fixed.f1
        rep.curve = sweep.curve
        rep.details["best_point"] = {"threshold": sweep.threshold, "precision": sweep.precision,
                                     "recall": sweep.recall, "f1": sweep.f1}
    rep.validate()
    return rep


# ---------------------------------------------------------------- error propagation

ERROR_PROPAGATION_MODES = ("none", "predicted", "gold")


def error_propagation_study(labeled, train_corpus, hierarchy: TypeHierarchy, test_corpus,
                            gold: GoldAnnotation, train_config=None, infer_config=None,
                            min_count: int = 2, brown=None, k: int = 3,
                            modes: Sequence[str] = ERROR_PROPAGATION_MODES) -> list[dict]:
    """Relation accuracy with entity types injected as relation features.

    ``none`` trains and predicts without them (the default pipeline),
    ``predicted`` injects the types the first model assigns to each argument
    and ``gold`` uses the distant labels for training mentions and the gold
    annotation at test time. Returns one row per mode.
    """
    from .embedder import TrainConfig, build_graph, train
    from .features import entity_feature_lists, featurize_corpus
    from .inference import (InferenceConfig, batch_predict, embed_mention,
                            entity_type_vectors, predict_entity_typepath)

    train_config = train_config or TrainConfig()
    infer_config = infer_config or InferenceConfig()
    for m in modes:
        if m not in ERROR_PROPAGATION_MODES:
            raise ValueError(f"unknown mode {m!r}")

    class _M:
        __slots__ = ("doc_id", "sentence_index", "start", "end")

        def __init__(self, key):
            self.doc_id, self.sentence_index, self.start, self.end = key

    test_mentions = [_M(key) for key in sorted(gold.entities)]
    base_model = None
    rows = []
    for mode in ("none",) + tuple(m for m in modes if m != "none"):
        inject = None
        if mode == "gold":
            inject = {m.mention_id: sorted(t for t in m.types if t != NONE_TYPE)
                      for m in labeled.entity_mentions}
        elif mode == "predicted":
            tv = entity_type_vectors(base_model, hierarchy)
            inject = {}
            for m, feats in zip(labeled.entity_mentions,
                                entity_feature_lists(labeled.entity_mentions, train_corpus, brown, k)):
                vec, _ = embed_mention(feats, None, base_model, "ent")
                path, _ = predict_entity_typepath(vec, base_model, hierarchy, infer_config, tv)
                inject[m.mention_id] = path or []
        fs = featurize_corpus(labeled, train_corpus, min_count, brown, k, inject)
        result = train(build_graph(labeled, fs, hierarchy, train_config.noise_power), train_config)
        if mode == "none":
            base_model = result.model
        preds = batch_predict(test_corpus, test_mentions, result.model, hierarchy, infer_config,
                              brown, k, entity_type_features=mode,
                              gold_types={key: list(v) for key, v in gold.entities.items()})
        acc = relation_classification_accuracy(gold.relations,
                                               {p.key: p.relation for p in preds.relations})
        if mode in modes:
            rows.append({"mode": mode, "accuracy": acc,
                         "relation_mentions": sum(v is not None for v in gold.relations.values())})
    order = {m: i for i, m in enumerate(modes)}
    return sorted(rows, key=lambda r: order[r["mode"]])


def format_table(rows: Sequence[dict]) -> str:
    lines = ["mode\taccuracy"]
    lines += [f"{r['mode']}\t{r['accuracy']:.4f}" for r in rows]
    return "\n".join(lines) + "\n"
