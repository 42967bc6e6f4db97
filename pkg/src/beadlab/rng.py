"""Deterministic pseudo-random stream used by every stochastic routine.

The generator is the 64-bit splitmix sequence.  It was chosen because the
whole state is one integer, the update is a handful of integer ops, and
the exact same code can be written inside compiled kernels, so a compiled
run can be replayed step for step against the pure Python engines.

All derived draws (uniform doubles, exponentials, bounded integers) are
defined here once; compiled kernels reimplement the identical formulas.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 stream with unbiased bounded-integer draws."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MULT1) & _MASK
        z = ((z ^ (z >> 27)) * _MULT2) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def exponential(self, rate: float) -> float:
        """Exponential variate with the given rate (mean 1/rate)."""
        u = self.uniform()
        return -math.log1p(-u) / rate

    def below(self, n: int) -> int:
        """Unbiased uniform integer in [0, n) via 32-bit multiply-reject."""
        if not 0 < n <= 0xFFFFFFFF:
            raise ValueError(f"bound out of range: {n}")
        t = (1 << 32) % n
        while True:
            x = self.next_u64() >> 32
            m = x * n
            if (m & 0xFFFFFFFF) >= t:
                return m >> 32
