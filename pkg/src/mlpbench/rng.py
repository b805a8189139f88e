"""SplitMix64 pseudo-random generator.

Used for weight initialization and synthetic-dataset generation so that
runs are bit-reproducible across processes, strategies and the companion
framework-baseline implementation (which re-derives the same streams).
"""

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO53 = float(1 << 53)


class SplitMix64:
    """Deterministic 64-bit generator (Steele, Lea & Flood's splitmix64)."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        if not 0 <= seed <= _MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self._state = seed

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform draw in [0, 1): the top 53 bits over 2**53."""
        return (self.next_u64() >> 11) / _TWO53
