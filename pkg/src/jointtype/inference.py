"""Type inference for unseen mentions: embed a mention as the sum of its
feature vectors, then nearest-type search by cosine similarity."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus
from .embedder import EmbeddingModel
from .features import FeatureDictionary, extract_entity_features, extract_relation_features
from .kb import NONE_TYPE, ROOT, TypeHierarchy


@dataclass
class InferenceConfig:
    eta: float = 0.35
    relation_eta: float | None = None
    entity_eta: float | None = None
    include_none: bool = False

    @property
    def eta_relation(self) -> float:
        return self.eta if self.relation_eta is None else self.relation_eta

    @property
    def eta_entity(self) -> float:
        return self.eta if self.entity_eta is None else self.entity_eta


def _feature_index(model: EmbeddingModel, space: str) -> dict[str, int]:
    cache = model.__dict__.setdefault("_findex", {})
    if space not in cache:
        cache[space] = {f: i for i, f in enumerate(model.feature_names[space])}
    return cache[space]


def embed_mention(features: Iterable[str], dictionary: FeatureDictionary | None,
                  model: EmbeddingModel, space: str) -> tuple[np.ndarray, bool]:
    """Sum of the vectors of distinct retained features.

    Returns ``(vector, empty)`` where ``empty`` flags a mention none of whose
    features survived; its vector is zero.
    """
    index = dictionary.index if dictionary is not None else _feature_index(model, space)
    ids = sorted({index[f] for f in features if f in index})
    C = model.features[space]
    ids = [i for i in ids if i < C.shape[0]]
    if not ids:
        return np.zeros(model.d), True
    return C[ids].sum(axis=0), False


def _cosines(v: np.ndarray, T: np.ndarray) -> np.ndarray:
    nv = float(np.linalg.norm(v))
    nt = np.linalg.norm(T, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (T @ v) / (nt * nv)
    return np.where(nt > 0, out, -1.0) if nv > 0 else np.full(T.shape[0], -1.0)


def relation_scores(z_vec, model: EmbeddingModel, include_none: bool = False
                    ) -> tuple[list[str], np.ndarray]:
    labels = model.labels["rel"]
    keep = [k for k, t in enumerate(labels) if include_none or t != NONE_TYPE]
    return [labels[k] for k in keep], _cosines(np.asarray(z_vec, dtype=np.float64),
                                               model.types["rel"][keep])


def nearest_relation(z_vec, model: EmbeddingModel, include_none: bool = False
                     ) -> tuple[str | None, float]:
    """Most similar relation type and its cosine, before any threshold."""
    labels, sims = relation_scores(z_vec, model, include_none)
    if not labels or not np.any(z_vec):
        return None, -1.0
    k = int(np.argmax(sims))
    return labels[k], float(sims[k])


def predict_relation_type(z_vec, model: EmbeddingModel, config: InferenceConfig | None = None
                          ) -> tuple[str | None, float]:
    """Nearest relation type by cosine, or None below the threshold.

    Also returns the best similarity (used for precision-recall sweeps).
    """
    config = config or InferenceConfig()
    label, best = nearest_relation(z_vec, model, config.include_none)
    if label is None or best < config.eta_relation or label == NONE_TYPE:
        return None, best
    return label, best


def entity_type_vectors(model: EmbeddingModel, hierarchy: TypeHierarchy | None = None
                        ) -> dict[str, np.ndarray]:
    T = model.types["ent"]
    return {t: T[i] for i, t in enumerate(model.labels["ent"])}


def predict_entity_typepath(m_vec, model: EmbeddingModel, hierarchy: TypeHierarchy,
                            config: InferenceConfig | None = None, type_vectors: dict | None = None
                            ) -> tuple[list[str] | None, list[float]]:
    """Greedy top-down descent; a child is accepted iff its cosine reaches eta."""
    config = config or InferenceConfig()
    m_vec = np.asarray(m_vec, dtype=np.float64)
    if not np.any(m_vec):
        return None, []
    vecs = type_vectors if type_vectors is not None else entity_type_vectors(model, hierarchy)
    path, scores = [], []
    node = ROOT
    while True:
        kids = [c for c in hierarchy.children.get(node, []) if c in vecs]
        if not kids:
            break
        sims = _cosines(m_vec, np.stack([vecs[c] for c in kids]))
        k = int(np.argmax(sims))
        if sims[k] < config.eta_entity:
            break
        node = kids[k]
        path.append(node)
        scores.append(float(sims[k]))
    return (path or None), scores


# ---------------------------------------------------------------- batch

@dataclass
class EntityPrediction:
    doc_id: str
    sentence_index: int
    span: tuple[int, int]
    types: list[str] | None
    scores: list[float]

    @property
    def key(self) -> tuple:
        return (self.doc_id, self.sentence_index, *self.span)


@dataclass
class RelationPrediction:
    doc_id: str
    sentence_index: int
    em1: tuple[int, int]
    em2: tuple[int, int]
    relation: str | None
    score: float
    em1_types: list[str] | None
    em2_types: list[str] | None
    nearest: str | None = None   # best type before thresholding, for curves

    @property
    def key(self) -> tuple:
        return (self.doc_id, self.sentence_index, *self.em1, *self.em2)


@dataclass
class Predictions:
    entities: list[EntityPrediction] = field(default_factory=list)
    relations: list[RelationPrediction] = field(default_factory=list)

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for p in self.entities:
                fh.write(json.dumps({"kind": "entity", "id": f"{p.doc_id}:{p.sentence_index}:{p.span[0]}-{p.span[1]}",
                                     "doc_id": p.doc_id, "sentence_index": p.sentence_index,
                                     "span": list(p.span), "types": p.types, "scores": p.scores},
                                    sort_keys=True) + "\n")
            for p in self.relations:
                fh.write(json.dumps({"kind": "relation",
                                     "id": f"{p.doc_id}:{p.sentence_index}:{p.em1[0]}-{p.em1[1]}|{p.em2[0]}-{p.em2[1]}",
                                     "doc_id": p.doc_id, "sentence_index": p.sentence_index,
                                     "em1": list(p.em1), "em2": list(p.em2), "relation": p.relation,
                                     "score": p.score, "em1_types": p.em1_types,
                                     "em2_types": p.em2_types, "nearest": p.nearest},
                                    sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "Predictions":
        out = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                    if d["kind"] == "entity":
                        out.entities.append(EntityPrediction(d["doc_id"], d["sentence_index"],
                                                             tuple(d["span"]), d["types"], d["scores"]))
                    else:
                        out.relations.append(RelationPrediction(
                            d["doc_id"], d["sentence_index"], tuple(d["em1"]), tuple(d["em2"]),
                            d["relation"], d["score"], d["em1_types"], d["em2_types"],
                            d.get("nearest")))
                except (KeyError, ValueError, TypeError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad prediction record ({exc})") from None
        return out


def batch_predict(corpus: Corpus, mentions: Sequence, model: EmbeddingModel,
                  hierarchy: TypeHierarchy, config: InferenceConfig | None = None,
                  brown: dict | None = None, k: int = 3, entity_type_features: str = "none",
                  gold_types: dict | None = None) -> Predictions:
    """Type every mention and every ordered same-sentence mention pair.

    ``mentions`` carry ``doc_id``, ``sentence_index``, ``start`` and ``end``.
    ``entity_type_features`` selects which entity types are injected into the
    relation features: ``none``, ``predicted`` (the entity predictions made
    here) or ``gold`` (``gold_types`` keyed by (doc, sentence, start, end)).
    """
    config = config or InferenceConfig()
    by_sent: dict[tuple, list[tuple[int, int]]] = {}
    for m in mentions:
        by_sent.setdefault((m.doc_id, m.sentence_index), []).append((m.start, m.end))
    out = Predictions()
    tvecs = entity_type_vectors(model, hierarchy)
    for key in sorted(by_sent):
        sent = corpus.sentence(*key)
        spans = sorted(set(by_sent[key]))
        paths = {}
        for sp in spans:
            vec, _ = embed_mention(extract_entity_features(sent, sp, brown, k), None, model, "ent")
            path, scores = predict_entity_typepath(vec, model, hierarchy, config, tvecs)
            paths[sp] = path
            out.entities.append(EntityPrediction(key[0], key[1], sp, path, scores))
        for a in spans:
            for b in spans:
                if a == b:
                    continue
                t1 = t2 = ()
                if entity_type_features == "predicted":
                    t1, t2 = paths[a] or (), paths[b] or ()
                elif entity_type_features == "gold":
                    t1 = (gold_types or {}).get((*key, *a), ())
                    t2 = (gold_types or {}).get((*key, *b), ())
                feats = extract_relation_features(sent, a, b, brown, k, t1, t2)
                vec, _ = embed_mention(feats, None, model, "rel")
                near, score = nearest_relation(vec, model, config.include_none)
                r = near if near not in (None, NONE_TYPE) and score >= config.eta_relation else None
                out.relations.append(RelationPrediction(key[0], key[1], a, b, r, score,
                                                        paths[a], paths[b], near))
    return out
