"""Constant-time weighted sampling (Vose alias tables) and the kernels' PRNG.

Both kernel backends draw from :class:`SplitMix64` with the same bit recipe,
so a seed means the same sample stream in the compiled and pure-Python paths.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / 9007199254740992.0


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _INV_2_53

    def randint(self, n: int) -> int:
        return int(self.uniform() * n)


def derive_seed(seed: int, stream: int) -> int:
    """Independent 64-bit seed for a numbered stream (worker, evaluation pass, ...)."""
    rng = SplitMix64((seed * 0x2545F4914F6CDD1D + stream) & _MASK)
    return rng.next_u64()


class AliasTable:
    """Vose alias table over non-negative weights.

    ``prob[i]`` is the probability of keeping column ``i`` and ``alias[i]`` the
    fallback outcome, so one draw costs two uniforms.
    """

    def __init__(self, weights) -> None:
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("alias table needs a non-empty 1-d weight vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("alias weights must be finite and non-negative")
        total = float(w.sum())
        if total <= 0:
            raise ValueError("alias weights sum to zero")
        self.weights = w
        n = w.size
        scaled = (w * (n / total)).tolist()
        prob = [0.0] * n
        alias = list(range(n))
        small = [i for i, x in enumerate(scaled) if x < 1.0]
        large = [i for i, x in enumerate(scaled) if x >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        for i in large:
            prob[i] = 1.0
        for i in small:
            prob[i] = 1.0
        self.prob = np.asarray(prob, dtype=np.float64)
        self.alias = np.asarray(alias, dtype=np.int64)

    def __len__(self) -> int:
        return self.prob.size

    def probabilities(self) -> np.ndarray:
        """Exact outcome distribution implied by the table (for verification)."""
        n = self.prob.size
        p = self.prob / n
        out = p.copy()
        np.add.at(out, self.alias, (1.0 - self.prob) / n)
        return out

    def draw(self, rng: SplitMix64) -> int:
        i = rng.randint(self.prob.size)
        return i if rng.uniform() < self.prob[i] else int(self.alias[i])

    def draw_many(self, n: int, seed: int) -> np.ndarray:
        from .kernels import alias_draw_many

        return alias_draw_many(self.prob, self.alias, n, seed)


def noise_weights(doc_freq, power: float = 0.75) -> np.ndarray:
    return np.power(np.asarray(doc_freq, dtype=np.float64), power)


def inverse_cdf_sample(weights, n: int, seed: int) -> np.ndarray:
    """Reference sampler by binary search on the cumulative weights."""
    w = np.asarray(weights, dtype=np.float64)
    cdf = np.cumsum(w / w.sum())
    cdf[-1] = 1.0
    u = np.random.default_rng(seed).random(n)
    return np.searchsorted(cdf, u, side="right")
