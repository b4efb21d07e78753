"""Deterministic random source for path sampling.

The generator is splitmix64: 64-bit state advanced by the golden-ratio
increment, output mixed by two xor-multiply rounds.  Uniform doubles
take the top 53 bits, so every drawn value is reproducible bit for bit
from the seed alone.  The compiled sampling kernel implements the same
algorithm in C; both lanes must stay in lockstep, so any change here
must be mirrored there.

Worker streams are derived from (seed, worker index) through the output
mix, giving independent, reproducible substreams for parallel sampling.
"""

from __future__ import annotations

ALGORITHM = "splitmix64"

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_stream(seed: int, index: int) -> int:
    """Initial state of worker ``index``'s substream."""
    return mix64((seed + (index + 1) * _GOLDEN) & _MASK)


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & _MASK

    def next_uint64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        return mix64(self.state)

    def next_double(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_uint64() >> 11) * 1.1102230246251565e-16  # 2**-53
