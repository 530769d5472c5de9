"""Portable pseudo-random streams.

Coefficient fixtures and phase-retrieval restarts must be reproducible
bit-for-bit from any language, so they are drawn from a small, fully
specified generator instead of numpy's bit generators.

Algorithm
---------
* ``splitmix64(x)``: ``x += 0x9E3779B97F4A7C15``; then
  ``z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9``,
  ``z = (z ^ (z >> 27)) * 0x94D049BB133111EB``, output ``z ^ (z >> 31)``
  (all arithmetic mod 2**64).
* Seeding: the four 64-bit words of xoshiro256** state are the first four
  splitmix64 outputs starting from ``seed mod 2**64``.
* ``xoshiro256**`` step: ``result = rotl(s1 * 5, 7) * 9``;
  ``t = s1 << 17``; ``s2 ^= s0``; ``s3 ^= s1``; ``s1 ^= s2``; ``s0 ^= s3``;
  ``s2 ^= t``; ``s3 = rotl(s3, 45)``.
* Uniform double in [0, 1): ``(next() >> 11) * 2**-53``.
* Standard normal: one Box-Muller draw per two uniforms,
  ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``; the sine branch is discarded.
* Seed derivation for stream ``index`` under ``master``: the
  ``index``-th splitmix64 output (0-based) of the sequence started at
  ``master``, i.e. ``mix(master + (index + 1) * 0x9E3779B97F4A7C15)``.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(state):
    """Advance a splitmix64 state; return ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    return state, _mix64(state)


def derive_seed(master, index):
    """Child seed for stream ``index`` of ``master`` (schedule independent)."""
    if index < 0:
        raise ValueError("index must be nonnegative")
    return _mix64((master + (index + 1) * GOLDEN_GAMMA) & MASK64)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** generator seeded through splitmix64."""

    def __init__(self, seed):
        sm = int(seed) & MASK64
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self.s = words

    def next_u64(self):
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def uniform(self, size=None):
        if size is None:
            return (self.next_u64() >> 11) * 2.0**-53
        return np.array([(self.next_u64() >> 11) * 2.0**-53 for _ in range(size)])

    def normal(self, size=None):
        def one():
            u1 = self.uniform()
            u2 = self.uniform()
            return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)

        if size is None:
            return one()
        return np.array([one() for _ in range(size)])
