"""In-memory knowledge base: entities, aliases, typed facts and the target type schema."""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

ROOT = "ROOT"
NONE_TYPE = "None"
RELATION_MARKER = "RELATION"


class KBLoadError(ValueError):
    """Raised when a KB file is malformed or internally inconsistent."""


@dataclass(frozen=True)
class EntityRecord:
    entity_id: str
    canonical_name: str
    aliases: frozenset[str]
    type_ids: frozenset[str]


@dataclass(frozen=True, order=True)
class RelationInstanceRecord:
    relation_type_id: str
    head_entity_id: str
    tail_entity_id: str


@dataclass
class TypeHierarchy:
    """Entity type tree under a synthetic root plus a flat relation type set.

    ``entity_types`` and ``relation_types`` keep declaration order; the reserved
    ``None`` label is appended to both label spaces by :meth:`entity_labels` and
    :meth:`relation_labels` and never appears among declared types.
    """

    parent: dict[str, str] = field(default_factory=dict)
    children: dict[str, list[str]] = field(default_factory=lambda: {ROOT: []})
    entity_types: list[str] = field(default_factory=list)
    relation_types: list[str] = field(default_factory=list)

    def entity_labels(self) -> list[str]:
        return self.entity_types + [NONE_TYPE]

    def relation_labels(self) -> list[str]:
        return self.relation_types + [NONE_TYPE]

    def path_to_root(self, type_id: str) -> list[str]:
        """Types from the top level down to ``type_id`` (root excluded)."""
        path = []
        node = type_id
        while node != ROOT:
            path.append(node)
            node = self.parent[node]
        return path[::-1]

    def is_leaf(self, type_id: str) -> bool:
        return not self.children.get(type_id)

    def is_chain(self, path: list[str]) -> bool:
        """True when ``path`` descends from the root one level at a time."""
        node = ROOT
        for t in path:
            if self.parent.get(t) != node:
                return False
            node = t
        return True


@dataclass
class KnowledgeBase:
    entities: dict[str, EntityRecord]
    relations: list[RelationInstanceRecord]
    hierarchy: TypeHierarchy
    _pair_index: dict[tuple[str, str], frozenset[str]] = field(default_factory=dict, repr=False)
    _alias_exact: dict[str, list[str]] = field(default_factory=dict, repr=False)
    _alias_folded: dict[str, list[str]] = field(default_factory=dict, repr=False)
    _fact_count: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        pairs: dict[tuple[str, str], set[str]] = defaultdict(set)
        facts: dict[str, int] = defaultdict(int)
        for rel in self.relations:
            pairs[rel.head_entity_id, rel.tail_entity_id].add(rel.relation_type_id)
            facts[rel.head_entity_id] += 1
            facts[rel.tail_entity_id] += 1
        self._pair_index = {k: frozenset(v) for k, v in pairs.items()}
        self._fact_count = dict(facts)
        exact: dict[str, set[str]] = defaultdict(set)
        folded: dict[str, set[str]] = defaultdict(set)
        for ent in self.entities.values():
            for alias in ent.aliases:
                exact[alias].add(ent.entity_id)
                folded[alias.casefold()].add(ent.entity_id)
        self._alias_exact = {k: sorted(v) for k, v in exact.items()}
        self._alias_folded = {k: sorted(v) for k, v in folded.items()}

    def lookup_alias(self, surface: str) -> list[str]:
        """Entities whose alias set contains ``surface``.

        Exact matches come first, then case-folded matches not already found;
        each tier is sorted by entity id.
        """
        hits = list(self._alias_exact.get(surface, ()))
        seen = set(hits)
        hits.extend(e for e in self._alias_folded.get(surface.casefold(), ()) if e not in seen)
        return hits

    def link(self, surface: str) -> str | None:
        """Pick one entity for ``surface``: first non-empty alias tier, most facts, lowest id."""
        tier = self._alias_exact.get(surface) or self._alias_folded.get(surface.casefold())
        if not tier:
            return None
        return min(tier, key=lambda e: (-self._fact_count.get(e, 0), e))

    def relations_between(self, head: str, tail: str) -> frozenset[str]:
        for e in (head, tail):
            if e not in self.entities:
                raise KeyError(f"unknown entity id {e!r}")
        return self._pair_index.get((head, tail), frozenset())

    def fact_count(self, entity_id: str) -> int:
        return self._fact_count.get(entity_id, 0)

    def alias_map(self) -> dict[str, list[str]]:
        return dict(self._alias_exact)

    def fact_set(self) -> set[RelationInstanceRecord]:
        return set(self.relations)


def _data_lines(path: os.PathLike | str) -> Iterator[tuple[int, list[str]]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def load_hierarchy(path: os.PathLike | str) -> TypeHierarchy:
    h = TypeHierarchy()
    pending: list[tuple[int, str, str]] = []
    for lineno, cols in _data_lines(path):
        if len(cols) != 2:
            raise KBLoadError(f"{path}:{lineno}: expected 2 columns, got {len(cols)}")
        a, b = cols
        if a == RELATION_MARKER:
            if b in (NONE_TYPE, ROOT):
                raise KBLoadError(f"{path}:{lineno}: reserved relation type {b!r}")
            if b not in h.relation_types:
                h.relation_types.append(b)
            continue
        if NONE_TYPE in (a, b) or a == ROOT:
            raise KBLoadError(f"{path}:{lineno}: reserved type id in {a!r} -> {b!r}")
        pending.append((lineno, a, b))

    declared = {child for _, child, _ in pending}
    for lineno, child, parent in pending:
        if parent != ROOT and parent not in declared:
            raise KBLoadError(f"{path}:{lineno}: unknown parent type {parent!r}")
        # walk up from the new parent: meeting the child means the edge closes a loop
        node = parent
        while node in h.parent:
            if node == child:
                break
            node = h.parent[node]
        if node == child or parent == child:
            raise KBLoadError(f"{path}:{lineno}: cycle at {parent}→{child}")
        if child in h.parent:
            raise KBLoadError(f"{path}:{lineno}: type {child!r} has more than one parent")
        h.parent[child] = parent
        h.children.setdefault(parent, []).append(child)
        h.children.setdefault(child, [])
        h.entity_types.append(child)

    for t in h.entity_types:
        node, steps = t, 0
        while node != ROOT:
            node = h.parent.get(node, ROOT)
            steps += 1
            if steps > len(h.entity_types):
                raise KBLoadError(f"{path}: type {t!r} is not connected to the root")
    return h


def load_kb(entity_file, relation_file, hierarchy_file) -> KnowledgeBase:
    hierarchy = load_hierarchy(hierarchy_file)
    known_types = set(hierarchy.entity_types)
    entities: dict[str, EntityRecord] = {}
    for lineno, cols in _data_lines(entity_file):
        if len(cols) != 4:
            raise KBLoadError(f"{entity_file}:{lineno}: expected 4 columns, got {len(cols)}")
        eid, name, aliases, types = cols
        if eid in entities:
            raise KBLoadError(f"{entity_file}:{lineno}: duplicate entity_id {eid!r}")
        alias_set = {a for a in aliases.split("|") if a} | {name}
        type_set = {t for t in types.split("|") if t}
        for t in sorted(type_set):
            if t not in known_types:
                raise KBLoadError(f"{entity_file}:{lineno}: unknown entity type {t!r}")
        entities[eid] = EntityRecord(eid, name, frozenset(alias_set), frozenset(type_set))

    known_rel = set(hierarchy.relation_types)
    relations = []
    for lineno, cols in _data_lines(relation_file):
        if len(cols) != 3:
            raise KBLoadError(f"{relation_file}:{lineno}: expected 3 columns, got {len(cols)}")
        rtype, head, tail = cols
        if rtype not in known_rel:
            raise KBLoadError(f"{relation_file}:{lineno}: unknown relation type {rtype!r}")
        for e in (head, tail):
            if e not in entities:
                raise KBLoadError(f"{relation_file}:{lineno}: unknown entity {e}")
        relations.append(RelationInstanceRecord(rtype, head, tail))
    return KnowledgeBase(entities, relations, hierarchy)


def dump_hierarchy(h: TypeHierarchy, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in h.entity_types:
            fh.write(f"{t}\t{h.parent[t]}\n")
        for r in h.relation_types:
            fh.write(f"{RELATION_MARKER}\t{r}\n")


def dump_kb(kb: KnowledgeBase, directory) -> tuple[Path, Path, Path]:
    """Write the three KB files into ``directory``; returns their paths."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    ent_p, rel_p, hier_p = d / "entities.tsv", d / "relations.tsv", d / "hierarchy.tsv"
    with open(ent_p, "w", encoding="utf-8") as fh:
        for eid in sorted(kb.entities):
            e = kb.entities[eid]
            aliases = "|".join(sorted(e.aliases))
            types = "|".join(t for t in kb.hierarchy.entity_types if t in e.type_ids)
            fh.write(f"{eid}\t{e.canonical_name}\t{aliases}\t{types}\n")
    with open(rel_p, "w", encoding="utf-8") as fh:
        for r in kb.relations:
            fh.write(f"{r.relation_type_id}\t{r.head_entity_id}\t{r.tail_entity_id}\n")
    dump_hierarchy(kb.hierarchy, hier_p)
    return ent_p, rel_p, hier_p


def build_kb(entities: Iterable[EntityRecord], relations: Iterable[RelationInstanceRecord],
             hierarchy: TypeHierarchy) -> KnowledgeBase:
    return KnowledgeBase({e.entity_id: e for e in entities}, list(relations), hierarchy)
