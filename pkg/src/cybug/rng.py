"""Deterministic 64-bit PRNG used by the arena.

xorshift64* (Marsaglia shifts 12/25/27, multiplier 0x2545F4914F6CDD1D),
state initialised from the seed with one splitmix64 round so that small or
adjacent seeds start far apart.  Pure Python ints, so streams are identical
on every platform.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


class XorShift64Star:
    __slots__ = ("state",)

    def __init__(self, seed: int = 0):
        self.state = splitmix64(seed & MASK64) or 1

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * _MULT) & MASK64

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]`` (rejection sampling, no modulo bias)."""
        span = hi - lo + 1
        if span <= 0:
            raise ValueError("empty range")
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            r = self.next_u64()
            if r < limit:
                return lo + r % span

    def getstate(self) -> int:
        return self.state

    def setstate(self, state: int) -> None:
        self.state = state
