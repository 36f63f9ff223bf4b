"""Seeded pseudo-random generation shared by the simulator and its JIT kernel.

The event loop needs a generator that (a) is reproducible bit-for-bit across
machines and (b) can be implemented identically in plain Python and inside the
compiled kernel. xoshiro256++ (public-domain, Blackman & Vigna) fits: 256-bit
state, period 2^256-1, trivial arithmetic. Seeds are expanded through
splitmix64 as the reference implementation recommends.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# 2^-53: top 53 bits of a 64-bit draw give a uniform double in [0, 1)
DOUBLE_SCALE = 1.0 / 9007199254740992.0


def _mix64(z: int) -> int:
    """splitmix64 output function."""
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def seed_state(seed: int) -> np.ndarray:
    """Expand an integer seed into a 4-word xoshiro256++ state."""
    state = np.empty(4, dtype=np.uint64)
    x = seed & MASK64
    for k in range(4):
        x = (x + _GOLDEN) & MASK64
        state[k] = _mix64(x)
    if not state.any():  # all-zero state is the lone fixed point
        state[0] = np.uint64(_GOLDEN)
    return state


def derive_seed(base: int, *parts: int) -> int:
    """Stable seed derivation for replicate/grid streams.

    Chains splitmix64 over the base seed and the given integer parts, so
    (base, parts) -> seed is reproducible across runs and machines.
    """
    x = base & MASK64
    for p in parts:
        x = _mix64((x + _GOLDEN + (int(p) * _MIX2)) & MASK64)
    return x


class Xoshiro256PP:
    """Pure-Python xoshiro256++, kept in lockstep with the JIT kernel.

    The compiled event loop in ``_kernel`` implements the same transition;
    both consume one uniform stream in the same order, so a run is
    reproducible event-for-event through either path.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = [int(w) for w in seed_state(seed)]

    def next_u64(self) -> int:
        s = self.state
        r = (s[0] + s[3]) & MASK64
        result = (((r << 23) | (r >> 41)) + s[0]) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = ((s[3] << 45) | (s[3] >> 19)) & MASK64
        return result

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * DOUBLE_SCALE
