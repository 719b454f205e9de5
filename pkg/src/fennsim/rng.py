"""Per-lane Xoroshiro32++ generators.

Each of the 32 vector lanes owns a 32-bit state split into two 16-bit words
``s0`` and ``s1``.  On the machine these live in two dedicated 512-bit
registers (all ``s0`` words in one, all ``s1`` words in the other).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LANES = 32

# Xoroshiro32++ rotation/shift triplet and output rotation.
ROT_A = 13
SHIFT_B = 5
ROT_C = 10
ROT_D = 9

_M16 = 0xFFFF


class ZeroLaneSeed(ValueError):
    pass


def rotl16(x, k: int):
    return ((x << k) | (x >> (16 - k))) & _M16


@dataclass(frozen=True)
class LaneRngState:
    s0: int
    s1: int

    def __post_init__(self):
        if not (0 <= self.s0 <= _M16 and 0 <= self.s1 <= _M16):
            raise ValueError("state words must be 16-bit unsigned")
        if self.s0 == 0 and self.s1 == 0:
            raise ZeroLaneSeed("the all-zero state is absorbing")


def _step(s0, s1):
    """Shared recurrence; works for ints and uint arrays alike."""
    out = (rotl16((s0 + s1) & _M16, ROT_D) + s0) & _M16
    s1 = s1 ^ s0
    new_s0 = rotl16(s0, ROT_A) ^ s1 ^ ((s1 << SHIFT_B) & _M16)
    new_s1 = rotl16(s1, ROT_C)
    return out, new_s0, new_s1


def next16(state: LaneRngState) -> tuple[int, LaneRngState]:
    out, s0, s1 = _step(state.s0, state.s1)
    return out, LaneRngState(s0, s1)


class VectorRngState:
    """32 independent lane generators, advanced together.

    Mutable: ``next()`` advances in place, which is what the machine needs.
    ``vector_next16`` offers the pure state-in/state-out form.
    """

    __slots__ = ("s0", "s1")

    def __init__(self, s0, s1):
        s0 = np.asarray(s0, dtype=np.int64) & _M16
        s1 = np.asarray(s1, dtype=np.int64) & _M16
        if s0.shape != (LANES,) or s1.shape != (LANES,):
            raise ValueError(f"need {LANES} words per state register")
        self.s0 = s0.copy()
        self.s1 = s1.copy()

    @classmethod
    def from_lanes(cls, lanes) -> "VectorRngState":
        lanes = list(lanes)
        return cls([ln.s0 for ln in lanes], [ln.s1 for ln in lanes])

    def lanes(self) -> list[LaneRngState]:
        return [LaneRngState(int(a), int(b)) for a, b in zip(self.s0, self.s1)]

    def copy(self) -> "VectorRngState":
        return VectorRngState(self.s0, self.s1)

    def zero_lanes(self) -> np.ndarray:
        return np.flatnonzero((self.s0 == 0) & (self.s1 == 0))

    def validate(self):
        bad = self.zero_lanes()
        if bad.size:
            raise ZeroLaneSeed(f"lanes {bad.tolist()} have all-zero state")

    def next(self) -> np.ndarray:
        """Advance every lane once; returns the 32 unsigned 16-bit outputs."""
        out, self.s0, self.s1 = _step(self.s0, self.s1)
        return out

    def __eq__(self, other):
        if not isinstance(other, VectorRngState):
            return NotImplemented
        return bool(np.array_equal(self.s0, other.s0) and np.array_equal(self.s1, other.s1))

    def __repr__(self):
        return f"VectorRngState(s0={self.s0.tolist()}, s1={self.s1.tolist()})"


def vector_next16(state: VectorRngState) -> tuple[np.ndarray, VectorRngState]:
    nxt = state.copy()
    out = nxt.next()
    return out, nxt


def seed(state: VectorRngState | None, image) -> VectorRngState:
    """Load the two state registers from a seed image.

    ``image`` is a pair of 32-word vectors (the two 512-bit words as they sit
    in vector memory).  ``state`` is accepted for symmetry with the register
    write and is otherwise ignored: the registers are replaced verbatim.
    """
    s0, s1 = image
    new = VectorRngState(np.asarray(s0, dtype=np.int64) & _M16, np.asarray(s1, dtype=np.int64) & _M16)
    new.validate()
    return new


_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_M64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + _SPLITMIX_GAMMA) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def seed_image(global_seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic per-lane seeds for experiments.

    Lane i gets s0 from stream ``2i`` and s1 from stream ``2i + 1`` of a
    SplitMix64 hash of the global seed.  A lane that comes out all-zero is
    re-mixed until it is not.
    """
    base = splitmix64(global_seed & _M64)
    s0 = np.zeros(LANES, dtype=np.int64)
    s1 = np.zeros(LANES, dtype=np.int64)
    for lane in range(LANES):
        a = splitmix64(base ^ (2 * lane)) & _M16
        b = splitmix64(base ^ (2 * lane + 1)) & _M16
        salt = 0
        while a == 0 and b == 0:
            salt += 1
            a = splitmix64(base ^ (2 * lane) ^ (salt << 32)) & _M16
            b = splitmix64(base ^ (2 * lane + 1) ^ (salt << 32)) & _M16
        s0[lane], s1[lane] = a, b
    return s0, s1


def seeded_state(global_seed: int) -> VectorRngState:
    return seed(None, seed_image(global_seed))
