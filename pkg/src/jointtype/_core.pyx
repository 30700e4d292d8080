# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, nonecheck=False
"""Compiled kernels: edge-sampled SGD over both embedding spaces, the joint
objective, bulk alias sampling and the segmentation DP.

The math mirrors :mod:`jointtype._fallback` operation for operation; the only
numeric difference is summation order inside dot products.
"""

from cython.parallel cimport prange
from libc.math cimport exp, log1p
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport malloc, free, calloc

import numpy as np

cdef extern from *:
    """
    #define JT_GOLDEN 0x9E3779B97F4A7C15ULL
    #define JT_MIX1 0xBF58476D1CE4E5B9ULL
    #define JT_MIX2 0x94D049BB133111EBULL
    """
    uint64_t JT_GOLDEN
    uint64_t JT_MIX1
    uint64_t JT_MIX2

cdef double INV_2_53 = 1.0 / 9007199254740992.0

cdef enum:
    F_REL = 1
    F_ENT = 2
    F_TRI = 4
    F_FREEZE = 8
    L_PARTIAL = 0
    L_ALL = 1

# flag bits shared with the Python side
FLAG_RELATION = F_REL
FLAG_ENTITY = F_ENT
FLAG_TRIPLES = F_TRI
FLAG_FREEZE_ENTITY = F_FREEZE
LOSS_PARTIAL = L_PARTIAL
LOSS_ALL_CANDIDATES = L_ALL


cdef struct Space:
    double* M
    double* C
    double* T
    int64_t n_t
    int64_t* e_src
    int64_t* e_dst
    double* e_w
    double* e_prob
    int64_t* e_alias
    int64_t n_e
    double* n_prob
    int64_t* n_alias
    int64_t n_n
    int64_t* c_ptr
    int64_t* c_idx
    int64_t* pl_rows
    int64_t n_pl
    int64_t* lvl
    int64_t n_lvl


cdef struct Triples:
    int64_t* z
    int64_t* m1
    int64_t* m2
    int64_t n
    int64_t* pool
    int64_t n_pool


cdef inline uint64_t _next(uint64_t* s) noexcept nogil:
    s[0] = s[0] + JT_GOLDEN
    cdef uint64_t z = s[0]
    z = (z ^ (z >> 30)) * JT_MIX1
    z = (z ^ (z >> 27)) * JT_MIX2
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t* s) noexcept nogil:
    return <double>(_next(s) >> 11) * INV_2_53


cdef inline int64_t _randint(uint64_t* s, int64_t n) noexcept nogil:
    return <int64_t>(_uniform(s) * n)


cdef inline int64_t _alias_draw(uint64_t* s, double* prob, int64_t* alias, int64_t n) noexcept nogil:
    cdef int64_t i = _randint(s, n)
    if _uniform(s) < prob[i]:
        return i
    return alias[i]


cdef inline double _dot(double* a, double* b, int d) noexcept nogil:
    cdef double acc = 0.0
    cdef int t
    for t in range(d):
        acc += a[t] * b[t]
    return acc


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline double _log_sigmoid(double x) noexcept nogil:
    if x >= 0:
        return -log1p(exp(-x))
    return x - log1p(exp(x))


cdef void _so_update(double* u, double* C, int64_t pos, int64_t* negs, int nneg,
                     double alpha, int d, double* gbuf) noexcept nogil:
    cdef int t, v
    cdef double f, g
    cdef double* c
    for t in range(d):
        gbuf[t] = 0.0
    c = C + pos * d
    f = _dot(u, c, d)
    g = alpha * (1.0 - _sigmoid(f))
    for t in range(d):
        gbuf[t] += g * c[t]
        c[t] += g * u[t]
    for v in range(nneg):
        c = C + negs[v] * d
        f = _dot(u, c, d)
        g = -alpha * _sigmoid(f)
        for t in range(d):
            gbuf[t] += g * c[t]
            c[t] += g * u[t]
    for t in range(d):
        u[t] += gbuf[t]


cdef inline void _shrink(double* x, double keep, int d) noexcept nogil:
    cdef int t
    for t in range(d):
        x[t] = keep * x[t]


cdef struct PL:
    # scratch for one partial-label evaluation; labels are grouped into
    # levels (tree depths) and each level carries its own hinge
    double* node
    double* coef
    char* mark
    int64_t* lvl
    int64_t L
    int64_t* bc
    int64_t* bn
    double* sc
    double* sn
    int64_t* a1         # best and second best label of the level, candidates or not
    int64_t* a2


cdef void _pl_alloc(PL* w, int64_t K, int64_t* lvl, int64_t L) noexcept nogil:
    w.node = <double*> calloc(2 * K + 2 * L + 1, sizeof(double))
    w.coef = w.node + K
    w.sc = w.node + 2 * K
    w.sn = w.sc + L
    w.bc = <int64_t*> malloc((4 * L + 1) * sizeof(int64_t))
    w.bn = w.bc + L
    w.a1 = w.bn + L
    w.a2 = w.a1 + L
    w.mark = <char*> calloc(K + 1, 1)
    w.lvl = lvl
    w.L = L


cdef void _pl_free(PL* w) noexcept nogil:
    free(w.node)
    free(w.bc)
    free(w.mark)


cdef void _pl_scores(double* u, double* T, int64_t K, int64_t* cand, int64_t nc, int d,
                     PL* w) noexcept nogil:
    """Per-level argmax candidate, non-candidate and overall top two (lowest id wins ties)."""
    cdef int64_t j, k, g
    cdef double s
    for g in range(w.L):
        w.bc[g] = -1
        w.bn[g] = -1
        w.a1[g] = -1
        w.a2[g] = -1
        w.sc[g] = 0.0
        w.sn[g] = 0.0
    for j in range(nc):
        w.mark[cand[j]] = 1
    for k in range(K):
        s = _dot(u, T + k * d, d)
        w.node[k] = s
        g = w.lvl[k]
        if w.a1[g] < 0 or s > w.node[w.a1[g]]:
            w.a2[g] = w.a1[g]
            w.a1[g] = k
        elif w.a2[g] < 0 or s > w.node[w.a2[g]]:
            w.a2[g] = k
        if w.mark[k]:
            if w.bc[g] < 0 or s > w.sc[g]:
                w.sc[g] = s
                w.bc[g] = k
        else:
            if w.bn[g] < 0 or s > w.sn[g]:
                w.sn[g] = s
                w.bn[g] = k
    for j in range(nc):
        w.mark[cand[j]] = 0


cdef inline int64_t _rival(PL* w, int64_t c) noexcept nogil:
    """Best other label on the level of ``c``, or -1 when it is alone there."""
    cdef int64_t g = w.lvl[c]
    return w.a2[g] if w.a1[g] == c else w.a1[g]


cdef double _pl_loss(double* u, double* T, int64_t K, int64_t* cand, int64_t nc, int d,
                     int variant, PL* w) noexcept nogil:
    cdef int64_t j, k, g
    cdef double h, total = 0.0
    _pl_scores(u, T, K, cand, nc, d, w)
    if variant == L_PARTIAL:
        for g in range(w.L):
            if w.bc[g] >= 0 and w.bn[g] >= 0:
                h = 1.0 - (w.sc[g] - w.sn[g])
                if h > 0:
                    total += h
        return total
    for j in range(nc):
        k = _rival(w, cand[j])
        if k >= 0:
            h = 1.0 - (w.node[cand[j]] - w.node[k])
            if h > 0:
                total += h
    return total



cdef double _pl_step(double* u, double* T, int64_t K, int64_t* cand, int64_t nc, double alpha,
                     double lam, int d, int variant, PL* w, double* ubuf) noexcept nogil:
    """One sub-gradient step on the per-level hinges plus L2 terms of the touched vectors.

    Partial: the level's best candidate moves towards ``u`` and its best
    non-candidate away. All-candidates ablation: every candidate is taken as
    the true label in turn and beaten against its best rival on the level,
    other candidates included. ``u`` moves by the matching combination of
    type vectors; everything uses pre-step values.
    """
    cdef int64_t j, k, g, r
    cdef double h, c, total = 0.0
    cdef double keep = 1.0 - alpha * lam
    cdef double* y
    cdef int t
    _pl_scores(u, T, K, cand, nc, d, w)
    if variant == L_PARTIAL:
        for g in range(w.L):
            if w.bc[g] < 0:
                continue
            w.mark[w.bc[g]] = 1
            if w.bn[g] < 0:
                continue
            w.mark[w.bn[g]] = 1
            h = 1.0 - (w.sc[g] - w.sn[g])
            if h > 0:
                w.coef[w.bc[g]] += 1.0
                w.coef[w.bn[g]] -= 1.0
                total += h
    else:
        for j in range(nc):
            k = cand[j]
            w.mark[k] = 1
            r = _rival(w, k)
            if r < 0:
                continue
            w.mark[r] = 1
            h = 1.0 - (w.node[k] - w.node[r])
            if h > 0:
                total += h
                w.coef[k] += 1.0
                w.coef[r] -= 1.0
    for t in range(d):
        ubuf[t] = u[t]
        u[t] = keep * u[t]
    for k in range(K):
        if not w.mark[k]:
            continue
        c = w.coef[k]
        y = T + k * d
        if c != 0.0:
            for t in range(d):
                u[t] += alpha * c * y[t]
                y[t] = keep * y[t] + alpha * c * ubuf[t]
        else:
            _shrink(y, keep, d)
        w.coef[k] = 0.0
        w.mark[k] = 0
    return total


cdef inline double _tau(double* z, double* m1, double* m2, int d, double* e) noexcept nogil:
    cdef int t
    cdef double acc = 0.0
    for t in range(d):
        e[t] = m1[t] + z[t] - m2[t]
        acc += e[t] * e[t]
    return acc


cdef double _tri_step(double* z, double* m1, double* m2, double* zc, double* m1c, double* m2c,
                      double alpha, int d, bint freeze_m, double* e, double* en) noexcept nogil:
    cdef double tp, tn, h, a2 = 2.0 * alpha
    cdef int t
    tp = _tau(z, m1, m2, d, e)
    tn = _tau(zc, m1c, m2c, d, en)
    h = 1.0 + tp - tn
    if h <= 0:
        return 0.0
    for t in range(d):
        z[t] -= a2 * e[t]
    for t in range(d):
        zc[t] += a2 * en[t]
    if not freeze_m:
        for t in range(d):
            m1[t] -= a2 * e[t]
        for t in range(d):
            m2[t] += a2 * e[t]
        for t in range(d):
            m1c[t] += a2 * en[t]
        for t in range(d):
            m2c[t] -= a2 * en[t]
    return h


cdef void _run(Space* rel, Space* ent, Triples* tri, int d, double alpha0, double lam, int V,
               int64_t n_iters, uint64_t* rng, int flags, int variant, int64_t iter_offset,
               int64_t total_iters, bint decay) noexcept nogil:
    cdef double* gbuf = <double*> malloc(4 * d * sizeof(double))
    cdef double* ubuf = gbuf + d
    cdef double* e1 = gbuf + 2 * d
    cdef double* e2 = gbuf + 3 * d
    cdef PL wr, we
    cdef PL* w
    cdef int64_t* negs = <int64_t*> malloc((V + 1) * sizeof(int64_t))
    cdef int64_t it, e, i, k, slot
    cdef int v
    cdef double alpha, frac
    cdef Space* sp
    cdef double* z
    cdef double* m1
    cdef double* m2
    cdef double* zc
    cdef double* m1c
    cdef double* m2c
    cdef int pass_
    _pl_alloc(&wr, rel.n_t, rel.lvl, rel.n_lvl)
    _pl_alloc(&we, ent.n_t, ent.lvl, ent.n_lvl)

    for it in range(n_iters):
        alpha = alpha0
        if decay:
            frac = 1.0 - <double>(iter_offset + it) / <double>total_iters
            if frac < 1e-4:
                frac = 1e-4
            alpha = alpha0 * frac
        for pass_ in range(2):
            if pass_ == 0:
                if not (flags & F_REL):
                    continue
                sp = rel
                w = &wr
            else:
                if not (flags & F_ENT):
                    continue
                sp = ent
                w = &we
            if sp.n_e > 0:
                e = _alias_draw(rng, sp.e_prob, sp.e_alias, sp.n_e)
                for v in range(V):
                    negs[v] = _alias_draw(rng, sp.n_prob, sp.n_alias, sp.n_n)
                _so_update(sp.M + sp.e_src[e] * d, sp.C, sp.e_dst[e], negs, V, alpha, d, gbuf)
            if sp.n_pl > 0:
                i = sp.pl_rows[_randint(rng, sp.n_pl)]
                _pl_step(sp.M + i * d, sp.T, sp.n_t, sp.c_idx + sp.c_ptr[i],
                         sp.c_ptr[i + 1] - sp.c_ptr[i], alpha, lam, d, variant, w, ubuf)
        if (flags & F_TRI) and tri.n > 0 and tri.n_pool > 0:
            k = _randint(rng, tri.n)
            z = rel.M + tri.z[k] * d
            m1 = ent.M + tri.m1[k] * d
            m2 = ent.M + tri.m2[k] * d
            for v in range(V):
                slot = _randint(rng, 3)
                zc = z
                m1c = m1
                m2c = m2
                if slot == 0:
                    zc = rel.M + tri.z[_randint(rng, tri.n)] * d
                elif slot == 1:
                    m1c = ent.M + tri.pool[_randint(rng, tri.n_pool)] * d
                else:
                    m2c = ent.M + tri.pool[_randint(rng, tri.n_pool)] * d
                _tri_step(z, m1, m2, zc, m1c, m2c, alpha, d, (flags & F_FREEZE) != 0, e1, e2)
    free(gbuf)
    _pl_free(&wr)
    _pl_free(&we)
    free(negs)


cdef void _fill_space(Space* s, tuple t):
    cdef double[:, ::1] M = t[0]
    cdef double[:, ::1] C = t[1]
    cdef double[:, ::1] T = t[2]
    cdef int64_t[::1] e_src = t[3]
    cdef int64_t[::1] e_dst = t[4]
    cdef double[::1] e_w = t[5]
    cdef double[::1] e_prob = t[6]
    cdef int64_t[::1] e_alias = t[7]
    cdef double[::1] n_prob = t[8]
    cdef int64_t[::1] n_alias = t[9]
    cdef int64_t[::1] c_ptr = t[10]
    cdef int64_t[::1] c_idx = t[11]
    cdef int64_t[::1] pl_rows = t[12]
    cdef int64_t[::1] lvl = t[13]
    cdef int64_t k
    s.M = &M[0, 0] if M.shape[0] > 0 else NULL
    s.C = &C[0, 0] if C.shape[0] > 0 else NULL
    s.T = &T[0, 0] if T.shape[0] > 0 else NULL
    s.n_t = T.shape[0]
    s.n_e = e_src.shape[0]
    s.e_src = &e_src[0] if s.n_e > 0 else NULL
    s.e_dst = &e_dst[0] if s.n_e > 0 else NULL
    s.e_w = &e_w[0] if s.n_e > 0 else NULL
    s.e_prob = &e_prob[0] if s.n_e > 0 else NULL
    s.e_alias = &e_alias[0] if s.n_e > 0 else NULL
    s.n_n = n_prob.shape[0]
    s.n_prob = &n_prob[0] if s.n_n > 0 else NULL
    s.n_alias = &n_alias[0] if s.n_n > 0 else NULL
    s.c_ptr = &c_ptr[0] if c_ptr.shape[0] > 0 else NULL
    s.c_idx = &c_idx[0] if c_idx.shape[0] > 0 else NULL
    s.n_pl = pl_rows.shape[0]
    s.pl_rows = &pl_rows[0] if s.n_pl > 0 else NULL
    if lvl.shape[0] != s.n_t:
        raise ValueError("label level table does not match the type matrix")
    s.lvl = &lvl[0] if s.n_t > 0 else NULL
    s.n_lvl = 1
    for k in range(s.n_t):
        if lvl[k] < 0:
            raise ValueError("negative label level")
        if lvl[k] + 1 > s.n_lvl:
            s.n_lvl = lvl[k] + 1
    if s.n_e > 0 and s.n_n == 0:
        raise ValueError("edges present but the noise table is empty")


cdef void _fill_triples(Triples* tr, tuple t):
    cdef int64_t[::1] z = t[0]
    cdef int64_t[::1] m1 = t[1]
    cdef int64_t[::1] m2 = t[2]
    cdef int64_t[::1] pool = t[3]
    tr.n = z.shape[0]
    tr.z = &z[0] if tr.n > 0 else NULL
    tr.m1 = &m1[0] if tr.n > 0 else NULL
    tr.m2 = &m2[0] if tr.n > 0 else NULL
    tr.n_pool = pool.shape[0]
    tr.pool = &pool[0] if tr.n_pool > 0 else NULL


def train_chunk(tuple rel_t, tuple ent_t, tuple tri_t, int d, double alpha, double lam, int V,
                int64_t n_iters, uint64_t state, int flags, int variant=L_PARTIAL,
                int threads=1, int64_t iter_offset=0, int64_t total_iters=1, bint decay=False):
    """Run ``n_iters`` SGD iterations in place; returns the advanced PRNG state.

    With ``threads > 1`` each worker runs ``n_iters // threads`` iterations on
    the shared matrices without locks, seeded from ``state`` and its index.
    """
    cdef Space rel, ent
    cdef Triples tri
    cdef uint64_t st = state
    cdef uint64_t* states
    cdef int w
    cdef int64_t per
    _fill_space(&rel, rel_t)
    _fill_space(&ent, ent_t)
    _fill_triples(&tri, tri_t)
    if threads <= 1:
        with nogil:
            _run(&rel, &ent, &tri, d, alpha, lam, V, n_iters, &st, flags, variant,
                 iter_offset, total_iters, decay)
        return st
    states = <uint64_t*> malloc(threads * sizeof(uint64_t))
    for w in range(threads):
        states[w] = _next(&st) ^ (<uint64_t>(w + 1) * JT_MIX1)
    per = n_iters // threads
    for w in prange(threads, nogil=True, schedule="static", chunksize=1, num_threads=threads):
        _run(&rel, &ent, &tri, d, alpha, lam, V, per, &states[w], flags, variant,
             iter_offset, total_iters, decay)
    free(states)
    return st


def objective_terms(tuple rel_t, tuple ent_t, tuple tri_t, int d, int V, uint64_t seed, int variant,
                    int64_t[::1] rel_edges, int64_t[::1] rel_pl, int64_t[::1] ent_edges,
                    int64_t[::1] ent_pl, int64_t[::1] tri_idx):
    """Unscaled sums of every objective term over the given index subsets.

    Returns ``(lzf, pl_z, sq_z, lmf, pl_m, sq_m, ozm, sq_r, sq_y)`` where ``sq_*``
    are squared norms (the caller applies lambda/2 and subsample scaling).
    Negatives and corruptions come from ``seed`` so repeated calls agree.
    """
    cdef Space rel, ent
    cdef Triples tri
    cdef uint64_t st = seed
    cdef Space* sp
    cdef int64_t[::1] eidx
    cdef int64_t[::1] pidx
    cdef double[9] out
    cdef int64_t j, e, i, k, slot, n_draw
    cdef int v, pass_
    cdef double f, acc, tp, tn, h
    cdef double* u
    cdef double* z
    cdef double* m1
    cdef double* m2
    cdef double* zc
    cdef double* m1c
    cdef double* m2c
    cdef double* e1 = <double*> malloc(2 * d * sizeof(double))
    cdef double* e2 = e1 + d
    cdef PL wr, we
    cdef PL* w
    _fill_space(&rel, rel_t)
    _fill_space(&ent, ent_t)
    _fill_triples(&tri, tri_t)
    _pl_alloc(&wr, rel.n_t, rel.lvl, rel.n_lvl)
    _pl_alloc(&we, ent.n_t, ent.lvl, ent.n_lvl)
    for j in range(9):
        out[j] = 0.0
    for pass_ in range(2):
        if pass_ == 0:
            sp = &rel
            w = &wr
            eidx = rel_edges
            pidx = rel_pl
        else:
            sp = &ent
            w = &we
            eidx = ent_edges
            pidx = ent_pl
        acc = 0.0
        for j in range(eidx.shape[0]):
            e = eidx[j]
            u = sp.M + sp.e_src[e] * d
            f = -_log_sigmoid(_dot(u, sp.C + sp.e_dst[e] * d, d))
            for v in range(V):
                k = _alias_draw(&st, sp.n_prob, sp.n_alias, sp.n_n)
                f -= _log_sigmoid(-_dot(u, sp.C + k * d, d))
            acc += sp.e_w[e] * f
        out[3 * pass_] = acc
        acc = 0.0
        h = 0.0
        for j in range(pidx.shape[0]):
            i = pidx[j]
            u = sp.M + i * d
            acc += _pl_loss(u, sp.T, sp.n_t, sp.c_idx + sp.c_ptr[i], sp.c_ptr[i + 1] - sp.c_ptr[i],
                            d, variant, w)
            h += _dot(u, u, d)
        out[3 * pass_ + 1] = acc
        out[3 * pass_ + 2] = h
        h = 0.0
        for k in range(sp.n_t):
            h += _dot(sp.T + k * d, sp.T + k * d, d)
        out[7 + pass_] = h
    acc = 0.0
    if tri.n > 0 and tri.n_pool > 0:
        for j in range(tri_idx.shape[0]):
            k = tri_idx[j]
            z = rel.M + tri.z[k] * d
            m1 = ent.M + tri.m1[k] * d
            m2 = ent.M + tri.m2[k] * d
            tp = _tau(z, m1, m2, d, e1)
            for v in range(V):
                slot = _randint(&st, 3)
                zc = z
                m1c = m1
                m2c = m2
                if slot == 0:
                    zc = rel.M + tri.z[_randint(&st, tri.n)] * d
                elif slot == 1:
                    m1c = ent.M + tri.pool[_randint(&st, tri.n_pool)] * d
                else:
                    m2c = ent.M + tri.pool[_randint(&st, tri.n_pool)] * d
                tn = _tau(zc, m1c, m2c, d, e2)
                h = 1.0 + tp - tn
                if h > 0:
                    acc += h
    out[6] = acc
    free(e1)
    _pl_free(&wr)
    _pl_free(&we)
    return tuple([out[0], out[1], out[2], out[3], out[4], out[5], out[6], out[7], out[8]])


def alias_draw_many(double[::1] prob, int64_t[::1] alias, int64_t n, uint64_t seed):
    cdef uint64_t st = seed
    cdef int64_t i, m = prob.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _alias_draw(&st, &prob[0], &alias[0], m)
    return out


def viterbi_batch(double[:, ::1] scores, int64_t[::1] offsets):
    """Best segmentation of each sentence given per-(start, length) log scores.

    ``scores[r, l-1]`` scores the segment of length ``l`` starting at row ``r``;
    sentence ``s`` owns rows ``offsets[s]:offsets[s+1]``. Ties go to fewer
    segments, then to the longer first segment. Returns ``(totals, lengths,
    seg_offsets)``.
    """
    cdef int64_t n_sent = offsets.shape[0] - 1
    cdef int64_t L = scores.shape[1]
    cdef int64_t rows = scores.shape[0]
    best_a = np.zeros(rows + n_sent, dtype=np.float64)
    nseg_a = np.zeros(rows + n_sent, dtype=np.int64)
    choice_a = np.zeros(rows, dtype=np.int64)
    totals = np.zeros(n_sent, dtype=np.float64)
    lengths = np.zeros(rows, dtype=np.int64)
    seg_off = np.zeros(n_sent + 1, dtype=np.int64)
    cdef double[::1] best = best_a
    cdef int64_t[::1] nseg = nseg_a
    cdef int64_t[::1] choice = choice_a
    cdef double[::1] tot = totals
    cdef int64_t[::1] lens = lengths
    cdef int64_t[::1] so = seg_off
    cdef int64_t s, base, n, i, l, lmax, bl, bns, ns, pos, cnt, bbase
    cdef double bs, sc
    with nogil:
        cnt = 0
        for s in range(n_sent):
            base = offsets[s]
            n = offsets[s + 1] - base
            bbase = base + s
            best[bbase + n] = 0.0
            nseg[bbase + n] = 0
            i = n - 1
            while i >= 0:
                lmax = L if L < n - i else n - i
                bl = 0
                bs = 0.0
                bns = 0
                for l in range(1, lmax + 1):
                    sc = scores[base + i, l - 1] + best[bbase + i + l]
                    ns = nseg[bbase + i + l] + 1
                    if bl == 0 or sc > bs or (sc == bs and (ns < bns or (ns == bns and l > bl))):
                        bs = sc
                        bns = ns
                        bl = l
                best[bbase + i] = bs
                nseg[bbase + i] = bns
                choice[base + i] = bl
                i -= 1
            tot[s] = best[bbase] if n > 0 else 0.0
            pos = 0
            while pos < n:
                lens[cnt] = choice[base + pos]
                cnt += 1
                pos += choice[base + pos]
            so[s + 1] = cnt
    return totals, lengths[:cnt].copy(), seg_off


# single-step wrappers used to cross-check the two backends

def so_update(double[::1] u, double[:, ::1] C, int64_t pos, int64_t[::1] negs, double alpha):
    cdef int d = u.shape[0]
    cdef double* g = <double*> malloc(d * sizeof(double))
    _so_update(&u[0], &C[0, 0], pos, &negs[0] if negs.shape[0] > 0 else NULL,
               negs.shape[0], alpha, d, g)
    free(g)


def pl_step(double[::1] u, double[:, ::1] T, int64_t[::1] cand, double alpha, double lam,
            int variant=L_PARTIAL, levels=None):
    """Single partial-label step; ``levels`` groups labels (default: one level)."""
    cdef int d = u.shape[0]
    cdef int64_t K = T.shape[0]
    if levels is None:
        levels = np.zeros(K, dtype=np.int64)
    cdef int64_t[::1] lv = levels
    if lv.shape[0] != K:
        raise ValueError("label level table does not match the type matrix")
    cdef int64_t L = (max(levels) + 1) if K > 0 else 1
    cdef PL w
    cdef double* buf = <double*> malloc(d * sizeof(double))
    _pl_alloc(&w, K, &lv[0], L)
    cdef double h = _pl_step(&u[0], &T[0, 0], K, &cand[0], cand.shape[0], alpha, lam, d,
                             variant, &w, buf)
    free(buf)
    _pl_free(&w)
    return h


def tri_step(double[::1] z, double[::1] m1, double[::1] m2, double[::1] zc, double[::1] m1c,
             double[::1] m2c, double alpha, bint freeze_m=False):
    cdef int d = z.shape[0]
    cdef double* buf = <double*> malloc(2 * d * sizeof(double))
    cdef double h = _tri_step(&z[0], &m1[0], &m2[0], &zc[0], &m1c[0], &m2c[0], alpha, d, freeze_m,
                              buf, buf + d)
    free(buf)
    return h
