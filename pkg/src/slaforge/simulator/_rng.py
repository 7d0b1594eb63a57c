"""Deterministic random stream shared by both simulator backends.

The kernel stream is SplitMix64: state advances by the 64-bit constant
0x9E3779B97F4A7C15, and each output mixes the state with two xor-multiply
rounds. Uniform doubles take the top 53 bits over 2^53, exactly as both the
pure-Python and the compiled kernel implement it, so the two backends draw
bit-identical streams from the same seed.
"""

from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_DNORM = 1.0 / 9007199254740992.0  # 2**-53


class SplitMix64:
    """Reference implementation of the kernel stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_uint64(self) -> int:
        s = (self.state + _GAMMA) & MASK64
        self.state = s
        z = ((s ^ (s >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def next_double(self) -> float:
        return (self.next_uint64() >> 11) * _DNORM


def derive_seed(master: int, *parts) -> int:
    """Stable 64-bit sub-seed from a master seed and hashable labels.

    Uses blake2b over the textual parts, so sub-streams depend on content
    (not positions) and never collide with the master stream by accident.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master) & MASK64).encode())
    for part in parts:
        h.update(b"\x1f")
        if isinstance(part, bytes):
            h.update(part)
        else:
            h.update(str(part).encode())
    return int.from_bytes(h.digest(), "little")
