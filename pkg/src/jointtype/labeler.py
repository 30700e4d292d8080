"""Distant supervision: link mentions to the KB, pair them into relation
mentions, attach candidate type sets and sample None examples."""

from __future__ import annotations

import json
import logging
import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .corpus import Corpus
from .kb import NONE_TYPE, KnowledgeBase
from .segmenter import MentionSpan

logger = logging.getLogger(__name__)


class LabelingError(ValueError):
    pass


@dataclass
class LabelerConfig:
    none_ratio: float = 0.3
    seed: int = 0


@dataclass(frozen=True)
class EntityMention:
    doc_id: str
    sentence_index: int
    start: int
    end: int
    surface: str
    linked_entity: str | None = None
    types: frozenset = frozenset()

    @property
    def mention_id(self) -> str:
        return f"{self.doc_id}:{self.sentence_index}:{self.start}-{self.end}"

    @property
    def sentence_key(self) -> tuple[str, int]:
        return (self.doc_id, self.sentence_index)

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def with_types(self, types) -> "EntityMention":
        return EntityMention(self.doc_id, self.sentence_index, self.start, self.end, self.surface,
                             self.linked_entity, frozenset(types))


@dataclass(frozen=True)
class RelationMention:
    em1: EntityMention
    em2: EntityMention
    candidates: frozenset = frozenset()

    @property
    def mention_id(self) -> str:
        return f"{self.em1.mention_id}|{self.em2.start}-{self.em2.end}"

    @property
    def sentence_key(self) -> tuple[str, int]:
        return self.em1.sentence_key

    def with_candidates(self, cands) -> "RelationMention":
        return RelationMention(self.em1, self.em2, frozenset(cands))


def _as_entity(m) -> EntityMention:
    if isinstance(m, EntityMention):
        return m
    return EntityMention(m.doc_id, m.sentence_index, m.start, m.end, m.surface)


def link_mentions(mentions: Iterable, kb: KnowledgeBase) -> tuple[list[EntityMention], list[EntityMention]]:
    """Split mentions into (linked with all KB types of the entity, unlinkable)."""
    linked, unlinked = [], []
    for m in mentions:
        m = _as_entity(m)
        eid = kb.link(m.surface)
        if eid is None:
            unlinked.append(EntityMention(m.doc_id, m.sentence_index, m.start, m.end, m.surface))
        else:
            types = kb.entities[eid].type_ids
            linked.append(EntityMention(m.doc_id, m.sentence_index, m.start, m.end, m.surface,
                                        eid, frozenset(types)))
    return linked, unlinked


def generate_relation_mentions(mentions: Iterable[EntityMention], corpus: Corpus | None = None
                               ) -> list[RelationMention]:
    """Both orderings of every mention pair that shares a sentence."""
    by_sent: dict[tuple[str, int], list[EntityMention]] = defaultdict(list)
    for m in mentions:
        if corpus is not None and m.sentence_key not in corpus:
            raise LabelingError(f"mention {m.mention_id} refers to an unknown sentence")
        by_sent[m.sentence_key].append(m)
    out = []
    for key in sorted(by_sent):
        ms = sorted(by_sent[key], key=lambda m: (m.start, m.end))
        for i, a in enumerate(ms):
            for b in ms[i + 1:]:
                out.append(RelationMention(a, b))
                out.append(RelationMention(b, a))
    return out


def assign_candidate_types(relation_mentions: Iterable[RelationMention], kb: KnowledgeBase):
    """Returns (Z_L with candidate sets, None-candidate pool, Z_U)."""
    labeled, none_pool, unlabeled = [], [], []
    for z in relation_mentions:
        e1, e2 = z.em1.linked_entity, z.em2.linked_entity
        if e1 is None or e2 is None:
            unlabeled.append(z)
            continue
        cands = kb.relations_between(e1, e2)
        if cands:
            labeled.append(z.with_candidates(cands))
        else:
            none_pool.append(z)
    return labeled, none_pool, unlabeled


def sample_none_examples(pool: list, ratio: float = 0.3, seed: int = 0) -> list:
    """Seeded uniform sample of floor(len(pool) * ratio) items, without replacement."""
    if not 0 < ratio <= 1:
        raise ValueError("none ratio must be in (0, 1]")
    if not pool:
        logger.warning("None sampling pool is empty")
        return []
    k = int(math.floor(len(pool) * ratio + 1e-9))
    idx = sorted(random.Random(seed).sample(range(len(pool)), k))
    out = []
    for i in idx:
        item = pool[i]
        if isinstance(item, RelationMention):
            out.append(item.with_candidates({NONE_TYPE}))
        else:
            out.append(item.with_types({NONE_TYPE}))
    return out


@dataclass
class LabeledCorpus:
    relation_mentions: list[RelationMention]   # Z_L followed by None-labelled relation examples
    entity_mentions: list[EntityMention]       # M_L followed by None-labelled entity examples
    n_relation_linked: int
    n_entity_linked: int
    unlabeled: list[RelationMention] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def linked_relations(self) -> list[RelationMention]:
        return self.relation_mentions[:self.n_relation_linked]

    @property
    def linked_entities(self) -> list[EntityMention]:
        return self.entity_mentions[:self.n_entity_linked]


def _multi_path(types: frozenset, kb: KnowledgeBase) -> bool:
    h = kb.hierarchy
    leaves = [t for t in types if not any(h.parent.get(o) == t for o in types)]
    return len(leaves) > 1


def build_labeled_corpus(mentions: Iterable, corpus: Corpus, kb: KnowledgeBase,
                         config: LabelerConfig | None = None) -> LabeledCorpus:
    config = config or LabelerConfig()
    linked, unlinked = link_mentions(mentions, kb)
    rel = generate_relation_mentions(linked + unlinked, corpus)
    z_l, none_pool, z_u = assign_candidate_types(rel, kb)
    if not z_l:
        raise LabelingError("no relation mention could be labelled from the KB (N_L = 0)")
    none_rel = sample_none_examples(none_pool, config.none_ratio, config.seed)
    none_ent = sample_none_examples(unlinked, config.none_ratio, config.seed + 1)

    # entity examples: every linked argument of Z_L plus linked mentions elsewhere
    seen = set()
    m_l = []
    for m in sorted(linked, key=lambda m: (m.sentence_key, m.start)):
        if m.mention_id not in seen:
            seen.add(m.mention_id)
            m_l.append(m)
    ents = m_l + none_ent
    rels = z_l + none_rel

    rel_hist = Counter(t for z in z_l for t in z.candidates)
    ent_hist = Counter(t for m in m_l for t in m.types)
    stats = {
        "N_L": len(z_l),
        "N'_L": len(m_l),
        "none_relation_examples": len(none_rel),
        "none_entity_examples": len(none_ent),
        "unlabeled_relation_mentions": len(z_u),
        "unlinkable_entity_mentions": len(unlinked),
        "relation_type_histogram": dict(sorted(rel_hist.items())),
        "entity_type_histogram": dict(sorted(ent_hist.items())),
        "relation_noise": sum(len(z.candidates) >= 2 for z in z_l) / len(z_l),
        "entity_noise": (sum(_multi_path(m.types, kb) for m in m_l) / len(m_l)) if m_l else 0.0,
    }
    logger.info("labelled corpus: N_L=%d N'_L=%d relation noise %.3f", stats["N_L"],
                stats["N'_L"], stats["relation_noise"])
    return LabeledCorpus(rels, ents, len(z_l), len(m_l), z_u, stats)


# ---------------------------------------------------------------- I/O

def _ent_dict(m: EntityMention) -> dict:
    return {"doc_id": m.doc_id, "sentence_index": m.sentence_index, "span": [m.start, m.end],
            "surface": m.surface, "entity": m.linked_entity, "types": sorted(m.types)}


def _ent_from(d: dict) -> EntityMention:
    return EntityMention(d["doc_id"], d["sentence_index"], d["span"][0], d["span"][1],
                         d["surface"], d.get("entity"), frozenset(d.get("types", ())))


def dump_labeled(lc: LabeledCorpus, relation_path, entity_path, stats_path=None) -> None:
    with open(relation_path, "w", encoding="utf-8") as fh:
        for i, z in enumerate(lc.relation_mentions):
            rec = {"id": z.mention_id, "linked": i < lc.n_relation_linked,
                   "em1": _ent_dict(z.em1), "em2": _ent_dict(z.em2),
                   "relation_types": sorted(z.candidates)}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    with open(entity_path, "w", encoding="utf-8") as fh:
        for i, m in enumerate(lc.entity_mentions):
            rec = {"id": m.mention_id, "linked": i < lc.n_entity_linked, **_ent_dict(m)}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    if stats_path is not None:
        with open(stats_path, "w", encoding="utf-8") as fh:
            json.dump(lc.stats, fh, indent=2, sort_keys=True)


def load_labeled(relation_path, entity_path) -> LabeledCorpus:
    rels, ents = [], []
    n_rel = n_ent = 0
    with open(relation_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                rels.append(RelationMention(_ent_from(d["em1"]), _ent_from(d["em2"]),
                                            frozenset(d["relation_types"])))
                n_rel += bool(d["linked"])
    with open(entity_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                ents.append(_ent_from(d))
                n_ent += bool(d["linked"])
    return LabeledCorpus(rels, ents, n_rel, n_ent)
