"""Deterministic random streams (SplitMix64).

The stdlib and numpy generators are excellent but their exact streams are
not contractual across versions, and seeded artifacts here (datasets, shot
banks, bootstrap CIs) must reproduce byte-for-byte anywhere. SplitMix64 is
tiny, published, and trivially portable, and because its state advances by
a fixed increment the i-th output is a closed form of (seed, i) — which
gives a vectorized variant that provably matches the sequential stream.

`derive` folds integer tags into fresh stream seeds, so independent
consumers (dataset instance i, shot j, repetition r, ...) get decorrelated
streams from one user-facing seed without coordinating draw order.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive(seed: int, *tags: int) -> int:
    """A stream seed decorrelated from `seed` and every other tag tuple."""
    h = _mix(seed & _MASK)
    for tag in tags:
        h = _mix(((h + _GOLDEN) & _MASK) ^ _mix(tag & _MASK))
    return h


# Namespace tags so different consumers of one user seed never collide.
NS_DATASET = 1
NS_TARGET = 2
NS_SHOTS = 3
NS_STABILITY = 4
NS_BOOTSTRAP = 5
NS_PLAY = 6


class SplitMix64:
    """Sequential generator; state advances by the golden-ratio increment."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return _mix(self._state)

    def random(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next64() >> 11) * 2.0**-53

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive (rejection sampled)."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            draw = self.next64()
            if draw < limit:
                return lo + draw % span

    def choice(self, seq):
        if not seq:
            raise ValueError("cannot choose from an empty sequence")
        return seq[self.randint(0, len(seq) - 1)]


def stream_array(seed: int, n: int) -> np.ndarray:
    """First n outputs of SplitMix64(seed), computed in one shot.

    Counter form of the same generator: output i (1-based) mixes
    seed + i * golden. Equality with the sequential class is under test.
    """
    states = np.uint64(seed & _MASK) + np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GOLDEN)
    z = (states ^ (states >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def index_array(seed: int, n: int, bound: int) -> np.ndarray:
    """n quasi-uniform indices in [0, bound) from one derived stream.

    Plain modulo reduction: bias is ~bound/2**64, beyond negligible for
    resampling indices, and it keeps the vectorized path branch-free.
    """
    return stream_array(seed, n) % np.uint64(bound)
