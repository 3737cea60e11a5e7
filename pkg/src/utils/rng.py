"""
Portable pseudo-random number generation.

Scene generation and policy initialization draw every random number from a
xoshiro256** stream seeded through splitmix64. Both algorithms are defined on
unsigned 64-bit integers, so the same seed produces the same scene on every
platform (and in any language that implements the same two generators).

Draw order matters: callers document the order in which they consume the
stream so that outputs stay bit-identical across versions.

Usage:
    from src.utils.rng import Xoshiro256StarStar

    rng = Xoshiro256StarStar(seed=7)
    rng.uniform(0.0, 1.0)
    rng.randint(5, 9)        # inclusive bounds
    rng.gauss()              # standard normal via Box-Muller
"""

import math
from typing import List

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple:
    """
    Advance a splitmix64 state by one step.

    Args:
        state: Current 64-bit state

    Returns:
        (new_state, output) tuple, both 64-bit unsigned integers
    """
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """
    xoshiro256** generator seeded from a single 64-bit value.

    The four state words are the first four splitmix64 outputs of the seed.
    """

    def __init__(self, seed: int):
        if seed < 0 or seed > MASK64:
            raise ValueError(f"Seed must be an unsigned 64-bit integer, got {seed}")
        sm = seed
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self._s = words
        self._spare_gauss = None

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64

        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def randint(self, low: int, high: int) -> int:
        """
        Integer in [low, high] (inclusive), by multiply-shift on 64 bits.

        The tiny modulo bias of multiply-shift is irrelevant at these ranges
        and keeps the draw count fixed at one word per call.
        """
        if high < low:
            raise ValueError(f"Empty range [{low}, {high}]")
        span = high - low + 1
        return low + ((self.next_u64() * span) >> 64)

    def gauss(self) -> float:
        """
        Standard normal draw (Box-Muller, both outputs used in turn).
        """
        if self._spare_gauss is not None:
            value = self._spare_gauss
            self._spare_gauss = None
            return value
        u1 = 1.0 - self.random()  # (0, 1]
        u2 = self.random()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare_gauss = radius * math.sin(angle)
        return radius * math.cos(angle)

    def gauss_list(self, count: int) -> List[float]:
        return [self.gauss() for _ in range(count)]

    def uniform_list(self, count: int, low: float, high: float) -> List[float]:
        return [self.uniform(low, high) for _ in range(count)]
