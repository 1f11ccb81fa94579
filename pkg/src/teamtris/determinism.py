"""Deterministic RNG primitives.

All gameplay randomness flows through an explicit 64-bit splitmix64 state so
that states are cheap to snapshot, hash, and serialize. Python's `random`
module is never used for simulation state (its state is huge and its
algorithms are not guaranteed stable across implementations).
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step. Returns (value, next_state)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64, state


def derive_seed(master: int, *tags: int) -> int:
    """Derive an independent 64-bit seed from a master seed and integer tags.

    Each tag is folded through splitmix64 so nearby masters/tags give
    uncorrelated streams.
    """
    s = master & MASK64
    for t in tags:
        s = (s ^ (t & MASK64)) & MASK64
        _, s = splitmix64(s)
        v, s = splitmix64(s)
        s = v
    return s


def shuffled(items: list, state: int) -> tuple[list, int]:
    """Fisher-Yates shuffle driven by splitmix64. Returns (new list, state')."""
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        v, state = splitmix64(state)
        j = v % (i + 1)
        out[i], out[j] = out[j], out[i]
    return out, state
