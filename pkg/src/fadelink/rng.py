"""Portable 64-bit PRNG (splitmix64) and the test-data stream oracle.

Every random decision in the simulator flows through this module so that
runs reproduce bit-for-bit across platforms and across the pure-Python
and compiled engines. Substreams are derived by hashing a master seed
with small integer tags, one substream per link direction.

The payload oracle is counter-based: word k of a stream is the k-th
output of splitmix64 seeded with the stream seed, truncated to 32 bits
and serialized big-endian. Any byte range of the stream can therefore be
regenerated at random, which lets source and verifier share one
definition without buffering whole streams.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# A draw u (uniform in [0, 2**64)) fires when u < threshold.
ALWAYS = 1 << 64


def mix64(x: int) -> int:
    """splitmix64 finalizer; a bijection on 64-bit words."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive(seed: int, *tags: int) -> int:
    """Derive a substream seed from a master seed and integer tags."""
    s = mix64(seed)
    for t in tags:
        s = mix64((s + GOLDEN) ^ (t & MASK64))
    return s


class SplitMix64:
    """Sequential splitmix64 generator; 64-bit state."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)


def prob_threshold(p: float) -> int:
    """Map a probability to the u64 comparison threshold for one draw."""
    if p <= 0.0:
        return 0
    if p >= 1.0:
        return ALWAYS
    return int(p * 2.0**64)


def bounded(u: int, n: int) -> int:
    """Map one draw to a uniform integer in [0, n) by multiply-shift."""
    return (u * n) >> 64


def stream_word(stream_seed: int, index: int) -> int:
    """Oracle word at position `index` (32-bit)."""
    return mix64((stream_seed + (index + 1) * GOLDEN) & MASK64) & 0xFFFFFFFF


def stream_bytes(stream_seed: int, offset: int, length: int) -> bytes:
    """Oracle stream bytes [offset, offset+length), 4-byte aligned.

    Vectorized with numpy; both bounds must be multiples of 4 (the
    stream is defined as a sequence of 32-bit words).
    """
    if offset % 4 or length % 4:
        raise ValueError("oracle stream offsets and lengths are word-aligned")
    if length == 0:
        return b""
    first = offset // 4
    idx = np.arange(first + 1, first + 1 + length // 4, dtype=np.uint64)
    x = np.uint64(stream_seed) + idx * np.uint64(GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    x = x ^ (x >> np.uint64(31))
    return x.astype(np.uint32).astype(">u4").tobytes()
