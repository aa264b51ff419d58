"""Deterministic seed derivation.

Every source of randomness in the toolkit draws from a generator seeded
through :func:`mix`, so results are independent of evaluation order and
worker count.
"""

from __future__ import annotations

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    """FNV-1a 64-bit hash of a string (over its UTF-8 bytes)."""
    h = _FNV_OFFSET
    for b in text.encode("utf-8"):
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def splitmix64(z: int) -> int:
    """SplitMix64 finalizer (64-bit avalanche)."""
    z &= _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def mix(*parts: int | str) -> int:
    """Fold integers and/or strings into one 64-bit seed.

    Strings are hashed with FNV-1a first; each part is absorbed through
    the SplitMix64 finalizer, so mix(a, b) != mix(b, a) in general.
    """
    z = 0
    for part in parts:
        v = fnv1a64(part) if isinstance(part, str) else part & _MASK64
        z = splitmix64((z + _GOLDEN + v) & _MASK64)
    return z
