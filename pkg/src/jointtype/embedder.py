"""Joint embedding of relation and entity mentions, their text features and
their type labels into two d-dimensional spaces.

The optimiser is edge-sampled stochastic sub-gradient descent. The inner loop
lives in :mod:`jointtype.kernels` (compiled or numpy fallback); this module
builds the training graph, owns the model, evaluates the objective and drives
the loop with convergence checks.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .kb import NONE_TYPE, TypeHierarchy
from .sampling import AliasTable, SplitMix64, derive_seed, noise_weights

logger = logging.getLogger(__name__)

SPACES = ("rel", "ent")
MODEL_MAGIC = "JOINTTYPE v1"


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    d: int = 50
    V: int = 5
    lam: float = 1e-4
    alpha: float = 0.025
    margin: float = 1.0
    max_iters: int | None = None
    epochs: float = 1.0            # budget in passes over the interactions R
    warmup_epochs: float = 1.0     # no convergence test before this many passes
    convergence_tol: float = 1e-4
    objective_check_every: int | None = None
    objective_mode: str = "sampled"
    seed: int = 0
    threads: int = 1
    lr_decay: bool = False
    loss: str = "partial"          # or "all_candidates" (ablation only)
    mode: str = "joint"            # joint | two_stage | relation_only
    noise_power: float = 0.75
    center_features: bool = True

    def validate(self) -> None:
        if self.d < 1 or self.V < 1 or self.lam < 0 or self.alpha <= 0:
            raise ValueError("need d >= 1, V >= 1, lam >= 0 and alpha > 0")
        if self.margin != 1.0:
            raise ValueError("the translation and partial-label margins are fixed at 1")
        if self.loss not in ("partial", "all_candidates"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.mode not in ("joint", "two_stage", "relation_only"):
            raise ValueError(f"unknown training mode {self.mode!r}")
        if self.objective_mode not in ("full", "sampled"):
            raise ValueError(f"unknown objective mode {self.objective_mode!r}")
        if self.epochs <= 0 or self.warmup_epochs < 0:
            raise ValueError("need epochs > 0 and warmup_epochs >= 0")


# ---------------------------------------------------------------- graph

@dataclass
class SpaceGraph:
    mention_ids: list[str]
    feature_names: list[str]
    labels: list[str]
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    doc_freq: np.ndarray
    cand_ptr: np.ndarray
    cand_idx: np.ndarray
    levels: np.ndarray = None     # hinge group of each label (tree depth); flat by default
    edge_table: AliasTable | None = None
    noise_table: AliasTable | None = None

    @property
    def n_mentions(self) -> int:
        return len(self.mention_ids)

    def __post_init__(self) -> None:
        if self.levels is None:
            self.levels = np.zeros(len(self.labels), dtype=np.int64)

    def candidates(self, row: int) -> np.ndarray:
        return self.cand_idx[self.cand_ptr[row]:self.cand_ptr[row + 1]]

    def build_tables(self, power: float) -> None:
        self.edge_table = AliasTable(self.weight) if self.weight.size else None
        self.noise_table = AliasTable(noise_weights(self.doc_freq, power)) if self.doc_freq.size else None


@dataclass
class TrainingGraph:
    rel: SpaceGraph
    ent: SpaceGraph
    triples: np.ndarray          # (n, 3): relation row, entity row of em1, entity row of em2
    pool: np.ndarray             # entity rows of linked mentions (corruption pool)
    hierarchy: TypeHierarchy | None = None

    @property
    def n_interactions(self) -> int:
        """Mention-feature pairs, mention-type associations and triples."""
        return int(self.rel.src.size + self.ent.src.size + self.rel.cand_idx.size
                   + self.ent.cand_idx.size + len(self.triples))

    def space(self, name: str) -> SpaceGraph:
        return self.rel if name == "rel" else self.ent


def label_levels(hierarchy: TypeHierarchy) -> np.ndarray:
    """Depth below the root (0 for top-level types and None) of each entity label."""
    return np.array([0 if t == NONE_TYPE else len(hierarchy.path_to_root(t)) - 1
                     for t in hierarchy.entity_labels()], dtype=np.int64)


def _space(ids, feature_names, labels, edges, doc_freq, cand_sets, keep) -> tuple[SpaceGraph, dict]:
    rows = {}
    for i in keep:
        rows[i] = len(rows)
    lab = {t: k for k, t in enumerate(labels)}
    mask = np.isin(edges.rows, np.fromiter(rows, dtype=np.int64, count=len(rows)))
    src = np.array([rows[r] for r in edges.rows[mask].tolist()], dtype=np.int64)
    ptr = [0]
    idx: list[int] = []
    for i in keep:
        c = sorted(lab[t] for t in cand_sets[i])
        idx.extend(c)
        ptr.append(len(idx))
    g = SpaceGraph([ids[i] for i in keep], list(feature_names), list(labels), src,
                   edges.feats[mask].astype(np.int64), edges.weights[mask].astype(np.float64),
                   np.asarray(doc_freq, dtype=np.float64), np.asarray(ptr, dtype=np.int64),
                   np.asarray(idx, dtype=np.int64))
    return g, rows


def build_graph(labeled, features, hierarchy: TypeHierarchy, noise_power: float = 0.75) -> TrainingGraph:
    """Assemble both spaces from a labelled corpus and its featurisation.

    Mentions without any retained feature are left out. None-labelled relation
    examples train in the relation space but form no triples.
    """
    fs = features
    rel_empty = set(fs.relation_edges.empty.tolist())
    ent_empty = set(fs.entity_edges.empty.tolist())
    rel_keep = [i for i in range(len(labeled.relation_mentions)) if i not in rel_empty]
    ent_keep = [i for i in range(len(labeled.entity_mentions)) if i not in ent_empty]
    rel, rel_rows = _space(fs.relation_ids, fs.relation_dict.strings, hierarchy.relation_labels(),
                           fs.relation_edges, fs.relation_dict.doc_freq,
                           [z.candidates for z in labeled.relation_mentions], rel_keep)
    ent, ent_rows = _space(fs.entity_ids, fs.entity_dict.strings, hierarchy.entity_labels(),
                           fs.entity_edges, fs.entity_dict.doc_freq,
                           [m.types for m in labeled.entity_mentions], ent_keep)
    ent.levels = label_levels(hierarchy)
    ent_by_id = {fs.entity_ids[i]: r for i, r in ent_rows.items()}
    triples = []
    for i in range(labeled.n_relation_linked):
        if i not in rel_rows:
            continue
        z = labeled.relation_mentions[i]
        a, b = ent_by_id.get(z.em1.mention_id), ent_by_id.get(z.em2.mention_id)
        if a is not None and b is not None:
            triples.append((rel_rows[i], a, b))
    pool = np.array(sorted(r for i, r in ent_rows.items() if i < labeled.n_entity_linked),
                    dtype=np.int64)
    graph = TrainingGraph(rel, ent, np.asarray(triples, dtype=np.int64).reshape(-1, 3), pool,
                          hierarchy)
    for sp in (rel, ent):
        sp.build_tables(noise_power)
    if rel.n_mentions == 0 and ent.n_mentions == 0:
        raise TrainingError("no training signal: the graph has no mentions")
    logger.info("graph: %d/%d relation mentions/features, %d/%d entity mentions/features, "
                "%d triples, R=%d", rel.n_mentions, len(rel.feature_names), ent.n_mentions,
                len(ent.feature_names), len(triples), graph.n_interactions)
    return graph


# ---------------------------------------------------------------- model

@dataclass
class EmbeddingModel:
    d: int
    mentions: dict[str, np.ndarray]
    features: dict[str, np.ndarray]
    types: dict[str, np.ndarray]
    mention_ids: dict[str, list[str]]
    feature_names: dict[str, list[str]]
    labels: dict[str, list[str]]

    def matrices(self):
        for sp in SPACES:
            yield f"{sp}.mention", self.mentions[sp]
            yield f"{sp}.feature", self.features[sp]
            yield f"{sp}.type", self.types[sp]

    def all_finite(self) -> bool:
        return all(np.isfinite(m).all() for _, m in self.matrices())

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(self.d, {k: v.copy() for k, v in self.mentions.items()},
                              {k: v.copy() for k, v in self.features.items()},
                              {k: v.copy() for k, v in self.types.items()},
                              {k: list(v) for k, v in self.mention_ids.items()},
                              {k: list(v) for k, v in self.feature_names.items()},
                              {k: list(v) for k, v in self.labels.items()})

    def type_vector(self, space: str, label: str) -> np.ndarray:
        return self.types[space][self.labels[space].index(label)]

    def save(self, path, include_mentions: bool = False) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{MODEL_MAGIC} d={self.d} spaces=2\n")
            for sp in SPACES:
                groups = [("feature", self.feature_names[sp], self.features[sp]),
                          ("type", self.labels[sp], self.types[sp])]
                if include_mentions:
                    groups.insert(0, ("mention", self.mention_ids[sp], self.mentions[sp]))
                for kind, names, mat in groups:
                    for name, row in zip(names, mat):
                        vals = " ".join(format(float(x), ".17g") for x in row)
                        fh.write(f"{sp}:{kind}:{name} {vals}\n")

    @classmethod
    def load(cls, path) -> "EmbeddingModel":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 4 or " ".join(header[:2]) != MODEL_MAGIC or not header[2].startswith("d="):
                raise ValueError(f"{path}: not a model file")
            d = int(header[2][2:])
            rows: dict = {(sp, k): ([], []) for sp in SPACES for k in ("mention", "feature", "type")}
            for lineno, raw in enumerate(fh, 2):
                line = raw.rstrip("\n")
                if not line:
                    continue
                parts = line.rsplit(" ", d)
                if len(parts) != d + 1:
                    raise ValueError(f"{path}:{lineno}: expected {d} values")
                sp, kind, name = parts[0].split(":", 2)
                names, vecs = rows[(sp, kind)]
                names.append(name)
                vecs.append([float(x) for x in parts[1:]])

        def mat(key):
            v = rows[key][1]
            return np.asarray(v, dtype=np.float64).reshape(len(v), d)

        return cls(d, {sp: mat((sp, "mention")) for sp in SPACES},
                   {sp: mat((sp, "feature")) for sp in SPACES},
                   {sp: mat((sp, "type")) for sp in SPACES},
                   {sp: rows[(sp, "mention")][0] for sp in SPACES},
                   {sp: rows[(sp, "feature")][0] for sp in SPACES},
                   {sp: rows[(sp, "type")][0] for sp in SPACES})


def init_model(graph: TrainingGraph, config: TrainConfig) -> EmbeddingModel:
    """Every coordinate i.i.d. uniform on [-0.5/d, 0.5/d]."""
    if graph.rel.n_mentions == 0 and graph.ent.n_mentions == 0:
        raise TrainingError("no training signal")
    d = config.d
    rng = np.random.default_rng(config.seed)
    lim = 0.5 / d

    def u(n):
        return rng.uniform(-lim, lim, size=(n, d))

    mentions, features, types = {}, {}, {}
    for sp in SPACES:
        g = graph.space(sp)
        mentions[sp] = u(g.n_mentions)
        features[sp] = u(len(g.feature_names))
        types[sp] = u(len(g.labels))
    return EmbeddingModel(d, mentions, features, types,
                          {sp: list(graph.space(sp).mention_ids) for sp in SPACES},
                          {sp: list(graph.space(sp).feature_names) for sp in SPACES},
                          {sp: list(graph.space(sp).labels) for sp in SPACES})


def _space_tuple(model: EmbeddingModel, graph: TrainingGraph, sp: str) -> tuple:
    g = graph.space(sp)
    e, n = g.edge_table, g.noise_table
    empty_f, empty_i = np.zeros(0), np.zeros(0, dtype=np.int64)
    return (model.mentions[sp], model.features[sp], model.types[sp], g.src, g.dst, g.weight,
            e.prob if e else empty_f, e.alias if e else empty_i,
            n.prob if n else empty_f, n.alias if n else empty_i,
            g.cand_ptr, g.cand_idx, np.arange(g.n_mentions, dtype=np.int64), g.levels)


def _triple_tuple(graph: TrainingGraph) -> tuple:
    t = graph.triples
    return (np.ascontiguousarray(t[:, 0]), np.ascontiguousarray(t[:, 1]),
            np.ascontiguousarray(t[:, 2]), graph.pool)


# ---------------------------------------------------------------- single steps

def neg_feature_sample(table: AliasTable, V: int, rng: SplitMix64) -> list[int]:
    return [table.draw(rng) for _ in range(V)]


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def second_order_loss(u, C, pos: int, negs: Sequence[int]) -> float:
    """Negated negative-sampling log-likelihood of one edge."""
    val = -math.log(_sigmoid(float(u @ C[pos])))
    for n in negs:
        val -= math.log(_sigmoid(-float(u @ C[n])))
    return val


def step_second_order(u, C, pos: int, negs: Sequence[int], alpha: float) -> None:
    kernels.so_update(u, C, int(pos), np.asarray(negs, dtype=np.int64), alpha)


def _level_split(K: int, candidates, levels):
    levels = np.zeros(K, dtype=np.int64) if levels is None else np.asarray(levels)
    cand = set(int(c) for c in candidates)
    for g in sorted({int(levels[c]) for c in cand}):
        members = [k for k in range(K) if levels[k] == g]
        yield [k for k in members if k in cand], [k for k in members if k not in cand]


def partial_label_loss(u, T, candidates: Sequence[int], levels=None) -> tuple[float, int, int]:
    """Hinge between the best candidate and the best non-candidate score.

    With ``levels`` the hinge is taken within each level that holds a
    candidate and the losses add up. Returns ``(loss, best candidate, best
    non-candidate)`` of the first level; the non-candidate is -1 (and that
    level's loss 0) when every type of the level is a candidate. Ties go to
    the lowest type id.
    """
    scores = T @ u
    total, first = 0.0, None
    for cand, rest in _level_split(T.shape[0], candidates, levels):
        bc = cand[int(np.argmax(scores[cand]))]
        bn = rest[int(np.argmax(scores[rest]))] if rest else -1
        if bn >= 0:
            total += max(0.0, 1.0 - (float(scores[bc]) - float(scores[bn])))
        if first is None:
            first = (bc, bn)
    return (total, *first)


def all_candidates_loss(u, T, candidates: Sequence[int], levels=None) -> float:
    """Ablation loss: every candidate is treated as the true label and gets its
    own hinge against the best other label of its level, candidates included."""
    scores = T @ u
    total = 0.0
    for cand, rest in _level_split(T.shape[0], candidates, levels):
        for c in cand:
            others = [k for k in cand + rest if k != c]
            if others:
                total += max(0.0, 1.0 - (float(scores[c]) - float(scores[others].max())))
    return float(total)


def step_partial_label(u, T, candidates: Sequence[int], alpha: float, lam: float,
                       loss: str = "partial", levels=None) -> float:
    variant = kernels.LOSS_PARTIAL if loss == "partial" else kernels.LOSS_ALL_CANDIDATES
    lv = None if levels is None else np.ascontiguousarray(levels, dtype=np.int64)
    return kernels.pl_step(u, T, np.asarray(sorted(candidates), dtype=np.int64), alpha, lam,
                           variant, lv)


def translation_error(z, m1, m2) -> float:
    e = np.asarray(m1, dtype=np.float64) + np.asarray(z, dtype=np.float64) - np.asarray(m2, dtype=np.float64)
    return float(e @ e)


def translation_loss(z, m1, m2, zc, m1c, m2c) -> float:
    return max(0.0, 1.0 + translation_error(z, m1, m2) - translation_error(zc, m1c, m2c))


def step_translation(triple, corrupted, alpha: float, freeze_entities: bool = False) -> float:
    z, m1, m2 = triple
    zc, m1c, m2c = corrupted
    return kernels.tri_step(z, m1, m2, zc, m1c, m2c, alpha, freeze_entities)


def corrupt_slot(rng: SplitMix64) -> int:
    """Slot to corrupt: 0 relation mention, 1 head entity, 2 tail entity."""
    return rng.randint(3)


# ---------------------------------------------------------------- objective

@dataclass
class ObjectiveValue:
    O_Z: float
    O_M: float
    O_ZM: float
    parts: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.O_Z + self.O_M + self.O_ZM


def _subsample(n: int, frac: float, rng: np.random.Generator) -> np.ndarray:
    if frac >= 1.0 or n == 0:
        return np.arange(n, dtype=np.int64)
    k = max(1, int(round(n * frac)))
    return np.sort(rng.choice(n, size=k, replace=False)).astype(np.int64)


def compute_objective(model: EmbeddingModel, graph: TrainingGraph, config: TrainConfig,
                      mode: str = "full", seed: int | None = None,
                      sample_fraction: float = 0.1) -> ObjectiveValue:
    """O = O_Z + O_M + O_ZM with negatives drawn from a fixed seed.

    ``sampled`` evaluates a fixed subsample of edges, mentions and triples
    and scales each sum back to full size.
    """
    seed = derive_seed(config.seed, 2) if seed is None else seed
    frac = 1.0 if mode == "full" else sample_fraction
    sub_rng = np.random.default_rng(seed % (2**63))
    idx = {}
    scale = {}
    for name, n in (("rel_e", graph.rel.src.size), ("rel_p", graph.rel.n_mentions),
                    ("ent_e", graph.ent.src.size), ("ent_p", graph.ent.n_mentions),
                    ("tri", len(graph.triples))):
        idx[name] = _subsample(n, frac, sub_rng)
        scale[name] = n / idx[name].size if idx[name].size else 0.0
    variant = kernels.LOSS_PARTIAL if config.loss == "partial" else kernels.LOSS_ALL_CANDIDATES
    lzf, pl_z, sq_z, lmf, pl_m, sq_m, ozm, sq_r, sq_y = kernels.objective_terms(
        _space_tuple(model, graph, "rel"), _space_tuple(model, graph, "ent"), _triple_tuple(graph),
        model.d, config.V, seed, variant, idx["rel_e"], idx["rel_p"], idx["ent_e"], idx["ent_p"],
        idx["tri"])
    half = config.lam / 2.0
    parts = {
        "L_ZF": lzf * scale["rel_e"], "partial_Z": pl_z * scale["rel_p"],
        "reg_Z": half * (sq_z * scale["rel_p"] + sq_r),
        "L_MF": lmf * scale["ent_e"], "partial_M": pl_m * scale["ent_p"],
        "reg_M": half * (sq_m * scale["ent_p"] + sq_y),
        "O_ZM": ozm * scale["tri"],
    }
    return ObjectiveValue(parts["L_ZF"] + parts["partial_Z"] + parts["reg_Z"],
                          parts["L_MF"] + parts["partial_M"] + parts["reg_M"],
                          parts["O_ZM"], parts)


def zero_model_objective(graph: TrainingGraph, V: int) -> float:
    """Closed-form O at the all-zero model (every dot product and tau is 0)."""
    ln2 = math.log(2.0)
    total = (V + 1) * ln2 * (graph.rel.weight.sum() + graph.ent.weight.sum())
    for g in (graph.rel, graph.ent):
        size = np.bincount(g.levels)
        for i in range(g.n_mentions):
            # one hinge at the margin per level that also holds a non-candidate
            held = np.bincount(g.levels[g.candidates(i)], minlength=size.size)
            total += int(np.sum((held > 0) & (held < size)))
    return float(total + V * len(graph.triples))


# ---------------------------------------------------------------- training

@dataclass
class TrainResult:
    model: EmbeddingModel
    iterations: int
    converged: bool
    trace: list[tuple[int, float]]
    seconds: float
    stages: list[dict] = field(default_factory=list)


def _objective_for(model, graph, config, flags) -> float:
    ov = compute_objective(model, graph, config, config.objective_mode)
    val = 0.0
    if flags & kernels.FLAG_RELATION:
        val += ov.O_Z
    if flags & kernels.FLAG_ENTITY:
        val += ov.O_M
    if flags & kernels.FLAG_TRIPLES:
        val += ov.O_ZM
    return val


def _run_stage(model, graph, config, flags, n_iters, state, label) -> tuple[int, int, bool, list]:
    """Run up to ``n_iters`` iterations with objective checks; returns (done, state, converged, trace)."""
    every = config.objective_check_every or max(10_000, n_iters // 20)
    every = max(1, min(every, n_iters)) if n_iters else 1
    variant = kernels.LOSS_PARTIAL if config.loss == "partial" else kernels.LOSS_ALL_CANDIDATES
    rel_t = _space_tuple(model, graph, "rel")
    ent_t = _space_tuple(model, graph, "ent")
    tri_t = _triple_tuple(graph)
    trace: list[tuple[int, float]] = []
    # the objective sits on a plateau while the vectors are still tiny, so a
    # relative-change test is meaningless during the first pass
    warmup = min(n_iters, int(math.ceil(config.warmup_epochs * graph.n_interactions)))
    done = 0
    prev = None
    converged = False
    while done < n_iters:
        n = min(every, n_iters - done)
        state = kernels.train_chunk(rel_t, ent_t, tri_t, config.d, config.alpha, config.lam,
                                    config.V, n, state, flags, variant, config.threads, done,
                                    n_iters, config.lr_decay)
        done += n
        for name, m in model.matrices():
            if not np.isfinite(m).all():
                bad = np.argwhere(~np.isfinite(m))[0]
                raise TrainingError(f"{label}: non-finite value in {name} row {bad[0]} "
                                    f"after {done} iterations (alpha={config.alpha})")
        if config.convergence_tol > 0 or done == n_iters:
            cur = _objective_for(model, graph, config, flags)
            trace.append((done, cur))
            logger.debug("%s: iteration %d objective %.6g", label, done, cur)
            if prev is not None and config.convergence_tol > 0 and done > warmup and \
                    abs(cur - prev) < config.convergence_tol * abs(prev):
                converged = True
                break
            prev = cur
    return done, state, converged, trace


def center_features(model: EmbeddingModel, graph: TrainingGraph) -> dict[str, np.ndarray]:
    """Subtract the D_f-weighted mean feature vector in each space, in place.

    Negative sampling leaves every feature vector with a shared offset that
    points away from the mention vectors. It carries no type information but
    dominates the norm of a summed test mention, which drags every cosine
    towards zero. Returns the removed offsets.
    """
    out = {}
    for sp in SPACES:
        C = model.features[sp]
        w = graph.space(sp).doc_freq
        if C.shape[0] == 0 or w.sum() <= 0:
            out[sp] = np.zeros(model.d)
            continue
        mu = (w @ C) / w.sum()
        C -= mu
        out[sp] = mu
    return out


def default_iterations(graph: TrainingGraph, config: TrainConfig) -> int:
    if config.max_iters is not None:
        return int(config.max_iters)
    return int(math.ceil(config.epochs * graph.n_interactions))


def train(graph: TrainingGraph, config: TrainConfig | None = None,
          model: EmbeddingModel | None = None) -> TrainResult:
    config = config or TrainConfig()
    config.validate()
    if model is None:
        model = init_model(graph, config)
    n_iters = default_iterations(graph, config)
    state = derive_seed(config.seed, 1)
    F = kernels
    if config.mode == "joint":
        plan = [("joint", F.FLAG_RELATION | F.FLAG_ENTITY | F.FLAG_TRIPLES)]
    elif config.mode == "two_stage":
        plan = [("entity", F.FLAG_ENTITY),
                ("relation", F.FLAG_RELATION | F.FLAG_TRIPLES | F.FLAG_FREEZE_ENTITY)]
    else:
        plan = [("relation", F.FLAG_RELATION)]
    t0 = time.perf_counter()
    total = 0
    trace: list = []
    stages = []
    converged = True
    for label, flags in plan:
        done, state, conv, tr = _run_stage(model, graph, config, flags, n_iters, state, label)
        total += done
        trace.extend((total - done + i, v) for i, v in tr)
        stages.append({"stage": label, "iterations": done, "converged": conv})
        converged = converged and conv
    if config.center_features:
        center_features(model, graph)
    secs = time.perf_counter() - t0
    logger.info("training finished: %d iterations in %.2fs (%s backend)", total, secs, kernels.BACKEND)
    return TrainResult(model, total, converged, trace, secs, stages)


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)


def none_index(labels: Sequence[str]) -> int:
    return list(labels).index(NONE_TYPE)
