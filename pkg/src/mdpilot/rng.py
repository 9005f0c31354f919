"""Deterministic 64-bit pseudo-random streams.

Everything random in this package flows from xoshiro256** seeded through
splitmix64.  Streams are split hierarchically with :func:`derive_seed`
(master seed + integer indices), so parallel simulations are reproducible
and independent of scheduling order.  The same algorithm is mirrored in
``_kernels`` on uint64 arrays for JIT-compiled inner loops; the two
implementations are cross-checked in the test suite.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """splitmix64 finalizer: avalanche a 64-bit value."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix_fill(seed: int, n: int) -> list[int]:
    """First ``n`` outputs of splitmix64 starting from ``seed``."""
    out = []
    z = seed & MASK64
    for _ in range(n):
        z = (z + _GOLDEN) & MASK64
        out.append(mix64(z))
    return out


def derive_seed(seed: int, *indices: int) -> int:
    """Derive a child seed from a master seed and a path of indices.

    ``derive_seed(s, i, j)`` is a pure function of ``(s, i, j)``; distinct
    index paths give statistically independent streams.
    """
    z = mix64(seed)
    for ix in indices:
        z = mix64(z ^ mix64((ix + _GOLDEN) & MASK64))
    return z


def state_from_seed(seed: int) -> np.ndarray:
    """xoshiro256** state vector for the kernel-side generator."""
    words = splitmix_fill(seed, 4)
    if not any(words):
        words[0] = 1
    return np.array(words, dtype=np.uint64)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** generator with explicit stream splitting.

    ``split(i)`` returns a fresh generator derived from the *original*
    seed and ``i``; it does not consume or depend on this generator's
    position, so split layouts are stable under refactoring.
    """

    __slots__ = ("seed", "_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        s = splitmix_fill(self.seed, 4)
        if not any(s):
            s[0] = 1
        self._s0, self._s1, self._s2, self._s3 = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def uniform(self) -> float:
        """Uniform float64 in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        i = int(self.uniform() * n)
        return n - 1 if i >= n else i

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def split(self, *indices: int) -> "Xoshiro256":
        return Xoshiro256(derive_seed(self.seed, *indices))

    def state_array(self) -> np.ndarray:
        """Snapshot of the current position as a kernel state vector."""
        return np.array([self._s0, self._s1, self._s2, self._s3], dtype=np.uint64)
