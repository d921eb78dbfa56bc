"""Counter-based pseudo-random generator used wherever a seed is a contract.

Tree-booster row/column subsampling and recurrent-net weight init must mean
the same thing for the same seed on every platform, so randomness there does
not go through ``numpy.random`` (whose bit streams are version-dependent).
The generator is SplitMix64 evaluated at ``key + counter * GAMMA``; all
constants below are the published SplitMix64 ones.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # unsigned 64-bit ops wrap modulo 2**64, matching the scalar path exactly
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class CounterRng:
    """Deterministic stream of variates addressed by (seed, stream, counter)."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & _MASK
        self.stream = int(stream) & _MASK
        self._key = _mix64(self.seed ^ _mix64(self.stream * _GAMMA + 1))
        self._counter = 0

    def substream(self, tag: int) -> "CounterRng":
        """Independent child generator; same (seed, tag) always yields the same child."""
        return CounterRng(self.seed, stream=_mix64(self.stream * _GAMMA + 2 * tag + 3))

    def next_word(self) -> int:
        word = _mix64(self._key + self._counter * _GAMMA)
        self._counter += 1
        return word

    def uniform(self) -> float:
        # 53-bit mantissa in [0, 1)
        return (self.next_word() >> 11) * (1.0 / (1 << 53))

    def uniform_array(self, n: int) -> np.ndarray:
        """n uniforms at once; identical values to n uniform() calls."""
        counters = (np.uint64(self._key)
                    + (np.uint64(self._counter) + np.arange(n, dtype=np.uint64))
                    * np.uint64(_GAMMA))
        self._counter += n
        words = _mix64_array(counters)
        return (words >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Integer in [0, n).  Modulo bias is < n / 2**64, irrelevant here."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_word() % n

    def normal(self) -> float:
        # Box-Muller; u1 nudged away from 0 so log() is safe
        u1 = self.uniform()
        u2 = self.uniform()
        if u1 <= 0.0:
            u1 = 2.0 ** -53
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), order deterministic (partial Fisher-Yates)."""
        if not 0 <= k <= n:
            raise ValueError("need 0 <= k <= n")
        pool = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
