"""Counter-based random number generation shared by every stochastic routine.

All randomness in the package is drawn from Philox-4x64 (numpy's
``np.random.Philox``) keyed by ``(seed, stream)``.  Only the raw 64-bit
words of the bit generator are consumed; the conversion to floats,
bounded integers and weighted choices is done here so that the output
stream does not depend on numpy's ``Generator`` distribution code, which
is allowed to change between numpy releases.

Stream format version: ``philox4x64-v1``.  Changing any conversion below
invalidates committed fixtures and must bump :data:`RNG_VERSION`.
"""
from __future__ import annotations

import numpy as np

RNG_VERSION = "philox4x64-v1"

_MASK64 = (1 << 64) - 1
_TWO_NEG53 = 1.0 / (1 << 53)


class CounterRNG:
    """Deterministic random source keyed by a 64-bit seed and a stream id."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream = int(stream) & _MASK64
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key, counter=0)

    def raw(self, size: int) -> np.ndarray:
        """``size`` raw uint64 words."""
        return np.asarray(self._bitgen.random_raw(size), dtype=np.uint64)

    def random(self, size: int) -> np.ndarray:
        """Uniform doubles on [0, 1) with 53 bits of resolution."""
        words = self.raw(size) >> np.uint64(11)
        return words.astype(np.float64) * _TWO_NEG53

    def uniform(self) -> float:
        return float(self.random(1)[0])

    def integers(self, high: int, size: int) -> np.ndarray:
        """Integers in [0, high) by multiply-and-floor on 53-bit uniforms.

        The bias is below 2**-53 * high and irrelevant at the sizes used here.
        """
        if high <= 0:
            raise ValueError("high must be positive")
        out = np.floor(self.random(size) * high).astype(np.int64)
        return np.minimum(out, high - 1)

    def integer(self, high: int) -> int:
        return int(self.integers(high, 1)[0])

    def choice(self, weights: np.ndarray, size: int) -> np.ndarray:
        """Indices drawn with probability proportional to ``weights``."""
        cdf = np.cumsum(np.asarray(weights, dtype=np.float64))
        total = cdf[-1]
        if not total > 0:
            raise ValueError("weights must have a positive sum")
        idx = np.searchsorted(cdf, self.random(size) * total, side="right")
        return np.minimum(idx, len(cdf) - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = np.arange(n, dtype=np.int64)
        if n < 2:
            return perm
        u = self.random(n - 1)
        for i in range(n - 1, 0, -1):
            j = int(u[n - 1 - i] * (i + 1))
            if j > i:
                j = i
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def geometric(self, mean: float, size: int) -> np.ndarray:
        """Non-negative geometric counts with the given mean (inverse CDF)."""
        if mean < 0:
            raise ValueError("mean must be non-negative")
        if mean == 0:
            return np.zeros(size, dtype=np.int64)
        q = mean / (1.0 + mean)  # P(X >= 1)
        u = self.random(size)
        # 1 - u lies in (0, 1]
        return np.floor(np.log1p(-u) / np.log(q)).astype(np.int64)
