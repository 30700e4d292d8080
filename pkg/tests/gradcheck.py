"""Finite-difference oracles shared by the unit and acceptance suites."""

import numpy as np

from jointtype import kernels
from jointtype.embedder import (partial_label_loss, second_order_loss, translation_loss)

H = 1e-5


def _fd(f, x, h=H):
    g = np.zeros_like(x)
    for i in range(x.size):
        old = x.flat[i]
        x.flat[i] = old + h
        a = f()
        x.flat[i] = old - h
        b = f()
        x.flat[i] = old
        g.flat[i] = (a - b) / (2 * h)
    return g


def rel_err(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12))


def second_order_case(rng, d=8, V=5, n=12, alpha=1e-3):
    """Relative error between the kernel's update direction and -grad of the edge loss."""
    u = rng.normal(scale=0.5, size=d)
    C = rng.normal(scale=0.5, size=(n, d))
    pos = 0
    negs = list(rng.choice(np.arange(1, n), size=V, replace=False))
    x = np.concatenate([u, C.ravel()])

    def loss():
        return second_order_loss(x[:d], x[d:].reshape(n, d), pos, negs)

    g = _fd(loss, x)
    u2, C2 = u.copy(), C.copy()
    kernels.so_update(u2, C2, pos, np.asarray(negs, dtype=np.int64), alpha)
    # the kernel uses the pre-step u for every partner, so the step is an exact gradient step
    step = np.concatenate([u2 - u, (C2 - C).ravel()]) / alpha
    return rel_err(step, -g)


def partial_label_case(rng, d=8, K=7, lam=1e-4, alpha=1e-3, levels=None, tries=100):
    """Same check for the partial-label hinge plus the L2 terms of the touched vectors.

    Draws until the maxima and the hinge are strictly away from their kinks.
    """
    lv = np.zeros(K, dtype=np.int64) if levels is None else np.asarray(levels)
    for _ in range(tries):
        u = rng.normal(size=d)
        T = rng.normal(scale=0.3, size=(K, d))
        ncand = rng.integers(1, K)
        cand = sorted(rng.choice(K, size=ncand, replace=False).tolist())
        s = T @ u
        touched, ok = set(), True
        for g in sorted(set(lv[cand].tolist())):
            members = [k for k in range(K) if lv[k] == g]
            cs = [k for k in members if k in cand]
            ns = [k for k in members if k not in cand]
            for group in (cs, ns):
                if len(group) > 1:
                    top = np.sort(s[group])[-2:]
                    ok &= top[1] - top[0] > 1e-3
            if ns:
                margin = s[cs].max() - s[ns].max()
                ok &= abs(1 - margin) > 1e-3
                touched |= {cs[int(np.argmax(s[cs]))], ns[int(np.argmax(s[ns]))]}
            else:
                touched.add(cs[int(np.argmax(s[cs]))])
        if not ok:
            continue
        touched = sorted(touched)
        x = np.concatenate([u, T.ravel()])

        def loss():
            uu, TT = x[:d], x[d:].reshape(K, d)
            val = partial_label_loss(uu, TT, cand, lv)[0]
            return val + lam / 2 * (uu @ uu + sum(TT[k] @ TT[k] for k in touched))

        g = _fd(loss, x)
        u2, T2 = u.copy(), T.copy()
        kernels.pl_step(u2, T2, np.asarray(cand, dtype=np.int64), alpha, lam,
                        kernels.LOSS_PARTIAL, lv)
        step = np.concatenate([u2 - u, (T2 - T).ravel()]) / alpha
        return rel_err(step, -g)
    raise RuntimeError("no kink-free partial-label instance found")


def translation_case(rng, d=8, alpha=1e-3, tries=100):
    for _ in range(tries):
        vs = [rng.normal(scale=0.4, size=d) for _ in range(6)]
        h = translation_loss(*vs)
        if h < 1e-3:
            continue
        x = np.concatenate(vs)

        def loss():
            return translation_loss(*np.split(x, 6))

        g = _fd(loss, x)
        ws = [v.copy() for v in vs]
        kernels.tri_step(*ws, alpha)
        step = np.concatenate([w - v for w, v in zip(ws, vs)]) / alpha
        return rel_err(step, -g)
    raise RuntimeError("no active translation hinge found")
