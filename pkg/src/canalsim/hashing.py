"""Deterministic hashing primitives shared across the simulator.

Everything here is fixed for the life of the wire protocol: golden frame
hashes, recorded logs and cross-implementation tests all depend on these
exact constants.
"""

from __future__ import annotations

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes, state: int = _FNV_OFFSET) -> int:
    """FNV-1a 64-bit over data, optionally continuing from a prior state."""
    h = state
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def mix64(x: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit value."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def counter_hash(seed: int, tick: int, q: int, r: int) -> int:
    """Order-independent 64-bit hash of (seed, tick, coordinate).

    Used for per-tick stochastic decisions: any evaluation order gives the
    same stream, which keeps parallel and sequential execution identical.
    """
    x = seed & _MASK64
    x = mix64(x ^ (tick & _MASK64))
    x = mix64(x ^ ((q & 0xFFFF) << 16 | (r & 0xFFFF)))
    return x
