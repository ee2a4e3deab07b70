"""Deterministic, portable PRNG for reproducible world generation and noise.

splitmix64 (Steele, Lea & Flood's published 64-bit mixer) with a fixed
mapping to floats: the top 53 bits of each output scaled by 2^-53.
Identical seeds produce identical streams on every platform and Python
version, which stdlib `random.Random` does not guarantee at the method
level across releases.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Derive an independent stream seed from a base seed and integer keys."""
    state = seed & _MASK64
    for key in keys:
        state = _mix64(state ^ ((key * _GAMMA) & _MASK64))
    return state


class Rng:
    """splitmix64 stream. All draws are documented functions of next_u64()."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix64(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1): top 53 bits / 2^53."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, a: float, b: float) -> float:
        return a + (b - a) * self.random()

    def randrange(self, n: int) -> int:
        """Uniform int in [0, n) via the multiply-shift map (bias < n/2^64)."""
        if n <= 0:
            raise ValueError("randrange() requires n > 0")
        return (self.next_u64() * n) >> 64

    def choice(self, seq):
        if not seq:
            raise ValueError("choice() from empty sequence")
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def gauss(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Box-Muller (cosine branch, no cached spare; two draws per call)."""
        u1 = 1.0 - self.random()  # in (0, 1], keeps log() finite
        u2 = self.random()
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(math.tau * u2)
