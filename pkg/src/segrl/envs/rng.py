"""SplitMix64: a tiny, fully specified 64-bit PRNG.

Environments use this instead of numpy's generators so that rendered frames
are reproducible bit-for-bit from a seed on any platform, independent of
numpy version.  Constants are the standard SplitMix64 ones:

    increment  0x9E3779B97F4A7C15
    mix 1      0xBF58476D1CE4E5B9  (xor-shift 30)
    mix 2      0x94D049BB133111EB  (xor-shift 27)
    final      xor-shift 31
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        """Uniform-ish integer in [0, n). Modulo reduction; bias < n/2^64."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        return self.next_u64() % n

    def random(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))
