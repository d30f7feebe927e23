"""Deterministic 64-bit xorshift* generator.

Used for every stochastic choice in the simulator (weight init, dataset
generation, fixed feedback matrices) so that runs with the same seed give
bit-identical results regardless of the installed numpy version.  The
generator is the classic xorshift64* recurrence: three shift-xors followed
by a multiplication by an odd constant, returning the high-quality upper
bits mixed through the full word.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D


class XorShift64Star:
    """Deterministic stream of 64-bit words with convenience draws."""

    def __init__(self, seed: int):
        # A zero state would be a fixed point of the recurrence; remap it
        # to an arbitrary odd constant so every seed yields a live stream.
        self.state = (seed & _MASK64) or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= (x >> 12)
        x ^= (x << 25) & _MASK64
        x ^= (x >> 27)
        self.state = x
        return (x * _MULT) & _MASK64

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection from the top of the range."""
        if n <= 0:
            raise ValueError("bound must be positive")
        limit = _MASK64 - (_MASK64 + 1) % n
        while True:
            x = self.next_u64()
            if x <= limit:
                return x % n

    def next_range(self, lo: int, hi: int) -> int:
        """Uniform integer in the inclusive range [lo, hi]."""
        return lo + self.next_below(hi - lo + 1)

    def next_unit(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def next_gauss(self) -> float:
        """Standard normal draw via Box-Muller (marginal, no caching)."""
        import math
        u1 = self.next_unit()
        while u1 == 0.0:
            u1 = self.next_unit()
        u2 = self.next_unit()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def fill_int8(self, shape: tuple[int, ...], lo: int, hi: int) -> np.ndarray:
        """Array of uniform integers in [lo, hi], row-major draw order."""
        n = 1
        for s in shape:
            n *= s
        flat = np.empty(n, dtype=np.int8)
        for i in range(n):
            flat[i] = self.next_range(lo, hi)
        return flat.reshape(shape)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
