"""Pure-Python/numpy versions of the compiled kernels in ``_core.pyx``.

Same signatures, same PRNG stream, same update order; only dot-product
summation order differs, so results agree to floating-point tolerance.
"""

from __future__ import annotations

import math
import threading

import numpy as np

from .sampling import _MASK, SplitMix64

FLAG_RELATION = 1
FLAG_ENTITY = 2
FLAG_TRIPLES = 4
FLAG_FREEZE_ENTITY = 8
LOSS_PARTIAL = 0
LOSS_ALL_CANDIDATES = 1

_MIX1 = 0xBF58476D1CE4E5B9


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _log_sigmoid(x: float) -> float:
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


class _Space:
    def __init__(self, t):
        (self.M, self.C, self.T, self.e_src, self.e_dst, self.e_w, e_prob, e_alias,
         n_prob, n_alias, self.c_ptr, self.c_idx, self.pl_rows, levels) = t
        self.levels = _levels_of(self.T.shape[0], levels)
        self.e_prob = e_prob.tolist()
        self.e_alias = e_alias.tolist()
        self.n_prob = n_prob.tolist()
        self.n_alias = n_alias.tolist()
        self.n_e = len(self.e_prob)
        self.n_n = len(self.n_prob)
        self.n_pl = len(self.pl_rows)
        if self.n_e and not self.n_n:
            raise ValueError("edges present but the noise table is empty")

    def cand(self, i):
        return self.c_idx[self.c_ptr[i]:self.c_ptr[i + 1]]


def _draw(rng: SplitMix64, prob, alias) -> int:
    i = rng.randint(len(prob))
    return i if rng.uniform() < prob[i] else alias[i]


def _so_update(u, C, pos, negs, alpha):
    g_u = np.zeros_like(u)
    c = C[pos]
    g = alpha * (1.0 - _sigmoid(float(np.dot(u, c))))
    g_u += g * c
    c += g * u
    for n in negs:
        c = C[n]
        g = -alpha * _sigmoid(float(np.dot(u, c)))
        g_u += g * c
        c += g * u
    u += g_u


def _levels_of(K, levels):
    if levels is None:
        return [0] * K
    if len(levels) != K:
        raise ValueError("label level table does not match the type matrix")
    return [int(g) for g in levels]


def _pl_scores(u, T, cand, levels):
    """Node scores, {level: [best cand, its score, best non-cand or -1, its score]}
    for the levels holding a candidate, and {level: (best, second best)} over all labels."""
    node = (T @ u).tolist()
    cset = set(int(c) for c in cand)
    best: dict[int, list] = {}
    top: dict[int, list] = {}
    for k, s in enumerate(node):
        g = levels[k]
        b = best.setdefault(g, [-1, 0.0, -1, 0.0])
        if k in cset:
            if b[0] < 0 or s > b[1]:
                b[0], b[1] = k, s
        elif b[2] < 0 or s > b[3]:
            b[2], b[3] = k, s
        a = top.setdefault(g, [-1, -1])
        if a[0] < 0 or s > node[a[0]]:
            a[1], a[0] = a[0], k
        elif a[1] < 0 or s > node[a[1]]:
            a[1] = k
    return node, {g: b for g, b in sorted(best.items()) if b[0] >= 0}, top


def _rival(top, levels, c):
    a1, a2 = top[levels[c]]
    return a2 if a1 == c else a1


def _pl_loss(u, T, cand, variant, levels):
    node, best, top = _pl_scores(u, T, cand, levels)
    total = 0.0
    if variant == LOSS_PARTIAL:
        for bc, sc, bn, sn in best.values():
            if bn >= 0:
                total += max(0.0, 1.0 - (sc - sn))
        return total
    for k in cand:
        r = _rival(top, levels, int(k))
        if r >= 0:
            h = 1.0 - (node[k] - node[r])
            if h > 0:
                total += h
    return total


def _pl_step(u, T, cand, alpha, lam, variant, levels):
    keep = 1.0 - alpha * lam
    node, best, top = _pl_scores(u, T, cand, levels)
    coef: dict[int, float] = {}
    total = 0.0
    if variant == LOSS_PARTIAL:
        for bc, sc, bn, sn in best.values():
            coef.setdefault(bc, 0.0)
            if bn < 0:
                continue
            coef.setdefault(bn, 0.0)
            h = 1.0 - (sc - sn)
            if h > 0:
                coef[bc] += 1.0
                coef[bn] -= 1.0
                total += h
    else:
        for k in cand:
            k = int(k)
            coef.setdefault(k, 0.0)
            r = _rival(top, levels, k)
            if r < 0:
                continue
            coef.setdefault(r, 0.0)
            h = 1.0 - (node[k] - node[r])
            if h > 0:
                total += h
                coef[k] += 1.0
                coef[r] -= 1.0
    ubuf = u.copy()
    u *= keep
    for k in sorted(coef):
        c = coef[k]
        y = T[k]
        if c != 0.0:
            u += (alpha * c) * y
            y[:] = keep * y + (alpha * c) * ubuf
        else:
            y *= keep
    return total


def _tri_step(z, m1, m2, zc, m1c, m2c, alpha, freeze_m):
    a2 = 2.0 * alpha
    e = m1 + z - m2
    en = m1c + zc - m2c
    h = 1.0 + float(np.dot(e, e)) - float(np.dot(en, en))
    if h <= 0:
        return 0.0
    z -= a2 * e
    zc += a2 * en
    if not freeze_m:
        m1 -= a2 * e
        m2 += a2 * e
        m1c += a2 * en
        m2c -= a2 * en
    return h


def _run(rel, ent, tri, alpha0, lam, V, n_iters, rng, flags, variant, iter_offset, total_iters, decay):
    tz, tm1, tm2, pool = tri
    n_tri, n_pool = len(tz), len(pool)
    freeze = bool(flags & FLAG_FREEZE_ENTITY)
    spaces = []
    if flags & FLAG_RELATION:
        spaces.append(rel)
    if flags & FLAG_ENTITY:
        spaces.append(ent)
    for it in range(n_iters):
        alpha = alpha0
        if decay:
            alpha = alpha0 * max(1e-4, 1.0 - (iter_offset + it) / total_iters)
        for sp in spaces:
            if sp.n_e:
                e = _draw(rng, sp.e_prob, sp.e_alias)
                negs = [_draw(rng, sp.n_prob, sp.n_alias) for _ in range(V)]
                _so_update(sp.M[sp.e_src[e]], sp.C, sp.e_dst[e], negs, alpha)
            if sp.n_pl:
                i = sp.pl_rows[rng.randint(sp.n_pl)]
                _pl_step(sp.M[i], sp.T, sp.cand(i), alpha, lam, variant, sp.levels)
        if flags & FLAG_TRIPLES and n_tri and n_pool:
            k = rng.randint(n_tri)
            z, m1, m2 = rel.M[tz[k]], ent.M[tm1[k]], ent.M[tm2[k]]
            for _ in range(V):
                slot = rng.randint(3)
                zc, m1c, m2c = z, m1, m2
                if slot == 0:
                    zc = rel.M[tz[rng.randint(n_tri)]]
                elif slot == 1:
                    m1c = ent.M[pool[rng.randint(n_pool)]]
                else:
                    m2c = ent.M[pool[rng.randint(n_pool)]]
                _tri_step(z, m1, m2, zc, m1c, m2c, alpha, freeze)


def train_chunk(rel_t, ent_t, tri_t, d, alpha, lam, V, n_iters, state, flags,
                variant=LOSS_PARTIAL, threads=1, iter_offset=0, total_iters=1, decay=False):
    rel, ent = _Space(rel_t), _Space(ent_t)
    rng = SplitMix64(state)
    if threads <= 1:
        _run(rel, ent, tri_t, alpha, lam, V, n_iters, rng, flags, variant, iter_offset,
             total_iters, decay)
        return rng.state
    seeds = [rng.next_u64() ^ (((w + 1) * _MIX1) & _MASK) for w in range(threads)]
    per = n_iters // threads
    workers = [
        threading.Thread(target=_run, args=(rel, ent, tri_t, alpha, lam, V, per, SplitMix64(s),
                                            flags, variant, iter_offset, total_iters, decay))
        for s in seeds
    ]
    for w in workers:
        w.start()
    for w in workers:
        w.join()
    return rng.state


def objective_terms(rel_t, ent_t, tri_t, d, V, seed, variant, rel_edges, rel_pl, ent_edges,
                    ent_pl, tri_idx):
    rel, ent = _Space(rel_t), _Space(ent_t)
    rng = SplitMix64(seed)
    out = [0.0] * 9
    for p, (sp, eidx, pidx) in enumerate(((rel, rel_edges, rel_pl), (ent, ent_edges, ent_pl))):
        acc = 0.0
        for e in eidx:
            u = sp.M[sp.e_src[e]]
            f = -_log_sigmoid(float(np.dot(u, sp.C[sp.e_dst[e]])))
            for _ in range(V):
                k = _draw(rng, sp.n_prob, sp.n_alias)
                f -= _log_sigmoid(-float(np.dot(u, sp.C[k])))
            acc += sp.e_w[e] * f
        out[3 * p] = acc
        acc = sq = 0.0
        for i in pidx:
            u = sp.M[i]
            acc += _pl_loss(u, sp.T, sp.cand(i), variant, sp.levels)
            sq += float(np.dot(u, u))
        out[3 * p + 1] = acc
        out[3 * p + 2] = sq
        out[7 + p] = float(sum(float(np.dot(t, t)) for t in sp.T))
    tz, tm1, tm2, pool = tri_t
    acc = 0.0
    if len(tz) and len(pool):
        for k in tri_idx:
            z, m1, m2 = rel.M[tz[k]], ent.M[tm1[k]], ent.M[tm2[k]]
            e = m1 + z - m2
            tp = float(np.dot(e, e))
            for _ in range(V):
                slot = rng.randint(3)
                zc, m1c, m2c = z, m1, m2
                if slot == 0:
                    zc = rel.M[tz[rng.randint(len(tz))]]
                elif slot == 1:
                    m1c = ent.M[pool[rng.randint(len(pool))]]
                else:
                    m2c = ent.M[pool[rng.randint(len(pool))]]
                en = m1c + zc - m2c
                h = 1.0 + tp - float(np.dot(en, en))
                if h > 0:
                    acc += h
    out[6] = acc
    return tuple(out)


def alias_draw_many(prob, alias, n, seed):
    rng = SplitMix64(seed)
    p, a = prob.tolist(), alias.tolist()
    return np.fromiter((_draw(rng, p, a) for _ in range(n)), dtype=np.int64, count=n)


def viterbi_batch(scores, offsets):
    L = scores.shape[1]
    rows = scores.tolist()
    n_sent = len(offsets) - 1
    totals = np.zeros(n_sent)
    lengths: list[int] = []
    seg_off = [0]
    for s in range(n_sent):
        base, end = int(offsets[s]), int(offsets[s + 1])
        n = end - base
        best = [0.0] * (n + 1)
        nseg = [0] * (n + 1)
        choice = [0] * n
        for i in range(n - 1, -1, -1):
            bl, bs, bns = 0, 0.0, 0
            row = rows[base + i]
            for ln in range(1, min(L, n - i) + 1):
                sc = row[ln - 1] + best[i + ln]
                ns = nseg[i + ln] + 1
                if bl == 0 or sc > bs or (sc == bs and (ns < bns or (ns == bns and ln > bl))):
                    bl, bs, bns = ln, sc, ns
            best[i], nseg[i], choice[i] = bs, bns, bl
        totals[s] = best[0] if n else 0.0
        pos = 0
        while pos < n:
            lengths.append(choice[pos])
            pos += choice[pos]
        seg_off.append(len(lengths))
    return totals, np.asarray(lengths, dtype=np.int64), np.asarray(seg_off, dtype=np.int64)


def so_update(u, C, pos, negs, alpha):
    _so_update(u, C, int(pos), [int(n) for n in negs], alpha)


def pl_step(u, T, cand, alpha, lam, variant=LOSS_PARTIAL, levels=None):
    return _pl_step(u, T, [int(c) for c in cand], alpha, lam, variant,
                    _levels_of(T.shape[0], levels))


def tri_step(z, m1, m2, zc, m1c, m2c, alpha, freeze_m=False):
    return _tri_step(z, m1, m2, zc, m1c, m2c, alpha, freeze_m)
