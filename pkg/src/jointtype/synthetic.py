"""Planted-type synthetic corpora with a matching KB and gold annotations.

Entity names combine a given name shared by all leaves of a top-level type
with a leaf-specific family name, context cue words exist at both levels of
the hierarchy, relations get their own cue words, and a share of KB entity pairs carry two relation facts so the
distant labels are ambiguous in a controlled way.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .corpus import Corpus, Document, Sentence, Token, dump_corpus
from .kb import (ROOT, EntityRecord, KnowledgeBase, RelationInstanceRecord, TypeHierarchy,
                 build_kb, dump_kb)

FILLERS = [("the", "DT"), ("a", "DT"), ("of", "IN"), ("in", "IN"), ("to", "TO"), ("and", "CC"),
           ("with", "IN"), ("on", "IN"), ("at", "IN"), ("for", "IN")]
NEUTRAL = [("met", "VBD"), ("saw", "VBD"), ("joined", "VBD"), ("called", "VBD"),
           ("and", "CC"), ("with", "IN"), ("later", "RB"), ("also", "RB")]
_ONSETS = "b c d f g h j k l m n p r s t v w z br ch dr fl gr kr pl st tr".split()
_VOWELS = "a e i o u ai ea io ou".split()
_CODAS = ["", "n", "r", "s", "l", "m", "x", "nd", "rt", "sk"]


@dataclass
class SyntheticConfig:
    n_relation_types: int = 5
    n_entity_types: int = 10
    n_sentences: int = 2000
    test_fraction: float = 0.1
    noise_rate: float = 0.3
    none_rate: float = 0.1
    kb_coverage: float = 0.9
    entity_noise_rate: float = 0.1
    entities_per_leaf: int = 40
    test_entities_per_leaf: int = 10
    name_pool: int = 24
    cue_words: int = 6
    type_cue_words: int = 4
    pairs_per_relation: int = 80
    relation_skew: float = 1.0
    sentences_per_doc: int = 10
    seed: int = 0


@dataclass
class GoldSentence:
    doc_id: str
    sentence_index: int
    entities: list[dict] = field(default_factory=list)   # {"span": [s, e], "types": [...]}
    relations: list[dict] = field(default_factory=list)  # {"em1": [s, e], "em2": [s, e], "label": str|None}


@dataclass
class SyntheticDataset:
    train: Corpus
    test: Corpus
    kb: KnowledgeBase
    gold: list[GoldSentence]          # test split
    train_gold: list[GoldSentence]
    config: SyntheticConfig

    @property
    def corpus(self) -> Corpus:
        return Corpus.concat([self.train, self.test])

    def save(self, directory) -> dict[str, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {"train": d / "train.conll", "test": d / "test.conll",
                 "gold": d / "gold.jsonl", "train_gold": d / "train_gold.jsonl"}
        dump_corpus(self.train, paths["train"])
        dump_corpus(self.test, paths["test"])
        dump_gold(self.gold, paths["gold"])
        dump_gold(self.train_gold, paths["train_gold"])
        ent, rel, hier = dump_kb(self.kb, d / "kb")
        paths.update(entities=ent, relations=rel, hierarchy=hier)
        with open(d / "synth_config.json", "w", encoding="utf-8") as fh:
            json.dump(asdict(self.config), fh, indent=2, sort_keys=True)
        return paths


def dump_gold(gold: list[GoldSentence], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for g in gold:
            fh.write(json.dumps(asdict(g), sort_keys=True) + "\n")


def load_gold(path) -> list[GoldSentence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(GoldSentence(**json.loads(line)))
            except (TypeError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad gold record ({exc})") from None
    return out


class _Words:
    def __init__(self, rng: random.Random) -> None:
        self.rng = rng
        self.used = {w for w, _ in FILLERS + NEUTRAL}

    def make(self, capital: bool = False) -> str:
        while True:
            n = self.rng.choice((2, 2, 3))
            w = "".join(self.rng.choice(_ONSETS) + self.rng.choice(_VOWELS) for _ in range(n))
            w += self.rng.choice(_CODAS)
            if w not in self.used:
                self.used.add(w)
                return w.capitalize() if capital else w


def _hierarchy(n_types: int, n_rel: int) -> tuple[TypeHierarchy, list[str]]:
    h = TypeHierarchy()
    n_top = max(1, round(n_types * 0.3))
    tops = [f"/t{i}" for i in range(n_top)]
    for t in tops:
        h.parent[t] = ROOT
        h.children[ROOT].append(t)
        h.children[t] = []
        h.entity_types.append(t)
    for j in range(n_types - n_top):
        top = tops[j % n_top]
        leaf = f"{top}/c{len(h.children[top])}"
        h.parent[leaf] = top
        h.children[top].append(leaf)
        h.children[leaf] = []
        h.entity_types.append(leaf)
    h.relation_types = [f"r{k}" for k in range(n_rel)]
    terminals = [t for t in h.entity_types if not h.children[t]]
    return h, terminals


def generate_synthetic(config: SyntheticConfig | None = None, **overrides) -> SyntheticDataset:
    cfg = config or SyntheticConfig()
    if overrides:
        cfg = SyntheticConfig(**{**asdict(cfg), **overrides})
    if min(cfg.n_relation_types, cfg.n_entity_types, cfg.n_sentences) < 1:
        raise ValueError("synthetic sizes must be >= 1")
    rng = random.Random(cfg.seed)
    words = _Words(rng)
    hier, terminals = _hierarchy(cfg.n_entity_types, cfg.n_relation_types)

    # name pools and context cues per top-level type and per leaf, relation cues
    top_of = {t: hier.path_to_root(t)[0] for t in terminals}
    tops = sorted(set(top_of.values()), key=hier.entity_types.index)
    given = {p: [words.make(True) for _ in range(cfg.name_pool)] for p in tops}
    pools = {t: (given[top_of[t]], [words.make(True) for _ in range(cfg.name_pool)])
             for t in terminals}
    top_cues = {p: [words.make() for _ in range(cfg.type_cue_words)] for p in tops}
    leaf_cues = {t: [words.make() for _ in range(cfg.type_cue_words)] for t in terminals}
    type_cues = {t: top_cues[top_of[t]] + leaf_cues[t] for t in terminals}
    rel_cues = {r: [(words.make(), rng.choice(("VBD", "VBN", "NN", "IN")))
                    for _ in range(cfg.cue_words)] for r in hier.relation_types}

    def make_entities(per_leaf: int, prefix: str, taken: set):
        out = {t: [] for t in terminals}
        for t in terminals:
            first, last = pools[t]
            while len(out[t]) < per_leaf:
                name = (rng.choice(first), rng.choice(last))
                if name in taken:
                    continue
                taken.add(name)
                out[t].append((f"{prefix}{len(taken):05d}", name, t))
        return out

    taken: set = set()
    train_ents = make_entities(cfg.entities_per_leaf, "e", taken)
    test_ents = make_entities(cfg.test_entities_per_leaf, "h", taken)

    # relation signatures over terminal types: heads walk the terminals from
    # the front and tails from the back, so every leaf gets to be an argument
    # whenever 2 * n_relation_types >= n_terminals, and head != tail
    nT = len(terminals)
    nR = len(hier.relation_types)
    sig = {}
    for k, r in enumerate(hier.relation_types):
        h_i = k % nT
        t_i = (k + max(nR, nT - nR)) % nT
        if t_i == h_i and nT > 1:
            t_i = (t_i + 1) % nT
        sig[r] = (terminals[h_i], terminals[t_i])
    partner = {r: hier.relation_types[(k + 1) % len(hier.relation_types)]
               for k, r in enumerate(hier.relation_types)}

    # KB entities and facts
    in_kb = {}
    entities = []
    for t in terminals:
        for eid, name, _ in train_ents[t]:
            in_kb[eid] = rng.random() < cfg.kb_coverage
            if not in_kb[eid]:
                continue
            types = set(hier.path_to_root(t))
            if rng.random() < cfg.entity_noise_rate and nT > 1:
                other = rng.choice([x for x in terminals if x != t])
                types |= set(hier.path_to_root(other))
            entities.append(EntityRecord(eid, " ".join(name), frozenset({" ".join(name)}),
                                         frozenset(types)))

    used_pairs: set = set()

    def draw_pairs(r, n, ents):
        h_t, t_t = sig[r]
        out = []
        tries = 0
        while len(out) < n and tries < 50 * n:
            tries += 1
            a, b = rng.choice(ents[h_t]), rng.choice(ents[t_t])
            if a[0] == b[0] or (a[0], b[0]) in used_pairs or (b[0], a[0]) in used_pairs:
                continue
            used_pairs.add((a[0], b[0]))
            out.append((a, b))
        return out

    clean = {r: draw_pairs(r, cfg.pairs_per_relation, train_ents) for r in hier.relation_types}
    ambiguous = {r: draw_pairs(r, max(1, cfg.pairs_per_relation // 2), train_ents)
                 for r in hier.relation_types}
    facts = []
    for r in hier.relation_types:
        for a, b in clean[r]:
            if in_kb[a[0]] and in_kb[b[0]]:
                facts.append(RelationInstanceRecord(r, a[0], b[0]))
        for a, b in ambiguous[r]:
            if in_kb[a[0]] and in_kb[b[0]]:
                facts.append(RelationInstanceRecord(r, a[0], b[0]))
                facts.append(RelationInstanceRecord(partner[r], a[0], b[0]))
    kb = build_kb(entities, sorted(set(facts)), hier)
    amb_with = {r: list(ambiguous[r]) for r in hier.relation_types}
    for r in hier.relation_types:
        amb_with[partner[r]].extend(ambiguous[r])

    test_clean = {r: draw_pairs(r, max(4, cfg.pairs_per_relation // 4), test_ents)
                  for r in hier.relation_types}

    weights = [cfg.relation_skew ** -k for k in range(len(hier.relation_types))]
    all_train = [e for t in terminals for e in train_ents[t]]
    all_test = [e for t in terminals for e in test_ents[t]]

    def sentence(r, a, b):
        toks: list[tuple[str, str]] = []
        gold_e = []
        if rng.random() < 0.5:
            toks.append((rng.choice(type_cues[a[2]]), "NN"))
        if rng.random() < 0.3:
            toks.append(rng.choice(FILLERS))
        s1 = len(toks)
        toks += [(w, "NNP") for w in a[1]]
        gold_e.append(([s1, len(toks)], hier.path_to_root(a[2])))
        if r is None:
            mid = rng.sample(NEUTRAL, 2)
        else:
            cues = rel_cues[r]
            mid = [rng.choice(cues)]
            if rng.random() < 0.6:
                mid.append(rng.choice(FILLERS))
            if rng.random() < 0.6:
                mid.append(rng.choice(cues))
        toks += mid
        if rng.random() < 0.5:
            toks.append(("the", "DT"))
        if rng.random() < 0.5:
            toks.append((rng.choice(type_cues[b[2]]), "NN"))
        s2 = len(toks)
        toks += [(w, "NNP") for w in b[1]]
        gold_e.append(([s2, len(toks)], hier.path_to_root(b[2])))
        if rng.random() < 0.5:
            toks.append(rng.choice(FILLERS))
            toks.append((rng.choice(type_cues[b[2]]), "NN"))
        toks.append((".", "."))
        rels = [{"em1": gold_e[0][0], "em2": gold_e[1][0], "label": r},
                {"em1": gold_e[1][0], "em2": gold_e[0][0], "label": None}]
        ents = [{"span": sp, "types": ty} for sp, ty in gold_e]
        return [Token(w, p) for w, p in toks], ents, rels

    def build(n, prefix, pools_clean, pool_amb, ents_all):
        docs: list[Document] = []
        gold = []
        for i in range(n):
            if i % cfg.sentences_per_doc == 0:
                docs.append(Document(f"{prefix}{len(docs):05d}"))
            doc = docs[-1]
            if rng.random() < cfg.none_rate:
                r = None
                while True:
                    a, b = rng.choice(ents_all), rng.choice(ents_all)
                    if a[0] != b[0] and (a[0], b[0]) not in used_pairs \
                            and (b[0], a[0]) not in used_pairs:
                        break
            else:
                r = rng.choices(hier.relation_types, weights)[0]
                pool = pool_amb[r] if pool_amb and rng.random() < cfg.noise_rate else pools_clean[r]
                a, b = rng.choice(pool)
            toks, ents, rels = sentence(r, a, b)
            s = Sentence(doc.doc_id, len(doc.sentences), tuple(toks))
            doc.sentences.append(s)
            gold.append(GoldSentence(s.doc_id, s.sentence_index, ents, rels))
        return Corpus(docs), gold

    n_test = max(1, int(round(cfg.n_sentences * cfg.test_fraction))) if cfg.test_fraction > 0 else 0
    n_train = max(1, cfg.n_sentences - n_test)
    train, train_gold = build(n_train, "train-", clean, amb_with if cfg.noise_rate > 0 else None,
                              all_train)
    test, gold = (build(n_test, "test-", test_clean, None, all_test) if n_test
                  else (Corpus([]), []))
    return SyntheticDataset(train, test, kb, gold, train_gold, cfg)
