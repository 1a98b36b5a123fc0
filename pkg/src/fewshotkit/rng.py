"""Portable deterministic random number generation.

Episode sampling must reproduce bit-identically across platforms, Python
versions and numpy versions, so nothing here delegates to a library RNG.
The generator is SplitMix64 (Steele, Lea & Flood 2014), a counter-based
64-bit generator with a fixed, documented constant set:

    state   += 0x9E3779B97F4A7C15            (golden-ratio increment)
    z        = state
    z        = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z        = (z ^ (z >> 27)) * 0x94D049BB133111EB
    output   = z ^ (z >> 31)

All arithmetic is modulo 2**64.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix64(z: int) -> int:
    """SplitMix64 finalizer, a bijection on 64-bit integers."""
    z = (z ^ (z >> 30)) * _MIX1 & _MASK64
    z = (z ^ (z >> 27)) * _MIX2 & _MASK64
    return z ^ (z >> 31)


def derive_episode_seed(base_seed: int, episode_index: int) -> int:
    """Derive the seed for one episode from a run-level base seed.

    Computed as mix64((base_seed XOR episode_index) + GOLDEN).  The
    finalizer is a bijection, so for a fixed base seed the map over
    episode indices is injective within 64-bit arithmetic.
    """
    if episode_index < 0:
        raise ValueError("episode_index must be non-negative")
    z = ((base_seed & _MASK64) ^ (episode_index & _MASK64)) + _GOLDEN & _MASK64
    return _mix64(z)


class SplitMix64:
    """Stateful SplitMix64 stream seeded with a 64-bit value."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix64(self._state)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (unbiased)."""
        if n <= 0:
            raise ValueError("n must be positive")
        # Largest multiple of n that fits in 64 bits; values above it are
        # rejected so every residue is equally likely.
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def sample(self, population: list, k: int) -> list:
        """k distinct elements via partial Fisher-Yates, in draw order."""
        if k > len(population):
            raise ValueError("sample larger than population")
        pool = list(population)
        out = []
        for i in range(k):
            j = i + self.randbelow(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
            out.append(pool[i])
        return out
