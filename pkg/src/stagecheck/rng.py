"""Seedable, portable pseudo-random generator (PCG32).

The simulation needs bit-identical random sequences for the same seed on
every platform, with a state small enough to live inside a stage snapshot.
PCG-XSH-RR 64/32 (O'Neill 2014) fits: two 64-bit integers of state, pure
integer arithmetic, well-known constants.
"""

from __future__ import annotations

from dataclasses import dataclass

_MULT = 6364136223846793005
_MASK64 = (1 << 64) - 1


@dataclass
class Pcg32:
    state: int
    inc: int

    @classmethod
    def seeded(cls, seed: int, stream: int = 1) -> "Pcg32":
        """Standard PCG32 seeding: distinct ``stream`` values give independent
        sequences for the same seed."""
        inc = ((stream << 1) | 1) & _MASK64
        rng = cls(state=0, inc=inc)
        rng.next_u32()
        rng.state = (rng.state + (seed & _MASK64)) & _MASK64
        rng.next_u32()
        return rng

    def next_u32(self) -> int:
        old = self.state
        self.state = (old * _MULT + self.inc) & _MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & 0xFFFFFFFF

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits drawn from two outputs."""
        hi = self.next_u32() >> 6   # 26 bits
        lo = self.next_u32() >> 5   # 27 bits
        return ((hi << 27) | lo) / float(1 << 53)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive. Unbiased via
        rejection sampling on the 32-bit output."""
        span = hi - lo + 1
        limit = (0x100000000 // span) * span
        while True:
            draw = self.next_u32()
            if draw < limit:
                return lo + draw % span

    def coin(self) -> bool:
        """Fair coin flip: one output, top bit."""
        return bool(self.next_u32() >> 31)

    def copy(self) -> "Pcg32":
        return Pcg32(self.state, self.inc)
