"""Portable seeded random streams.

The generator is xoshiro256** (Blackman & Vigna) whose four 64-bit state words
are filled by splitmix64 from the user seed. Derived quantities:

* ``uniform()``: ``(next_u64() >> 11) * 2**-53`` in [0, 1).
* ``integers(n)``: rejection sampling, draw ``x`` until
  ``x < 2**64 - (2**64 mod n)`` and return ``x mod n`` (unbiased).
* ``normal()``: Box-Muller on ``u1 = 1 - uniform()``, ``u2 = uniform()``;
  arrays consume one pair per two values and drop the unused half of the last
  pair.
* ``fork(key)``: a new stream seeded with ``splitmix64(seed ^ mix(key))`` where
  ``mix`` is splitmix64 of the integer key, or of the first 8 bytes of the
  SHA-256 of a string key. Forks depend on the seed only, never on how much of
  the parent stream has been consumed.

Integer and uniform streams are bit-identical on every platform; normals go
through ``math.log``/``math.cos`` and inherit the platform libm.
"""

from __future__ import annotations

import hashlib
import math
from typing import Sequence, Union

import numpy as np

from app_core.errors import ArgumentError

ALGORITHM_ID = "xoshiro256**/splitmix64"

_MASK = (1 << 64) - 1
_TWO_PI = 2.0 * math.pi


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, output)."""

    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _key_to_int(key: Union[int, str]) -> int:
    if isinstance(key, bool):
        raise ArgumentError("fork key must be an int or str, not bool")
    if isinstance(key, int):
        return key & _MASK
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class Rng:
    """xoshiro256** stream; identical seed gives an identical stream."""

    algorithm = ALGORITHM_ID

    def __init__(self, seed: int) -> None:
        if seed < 0:
            raise ArgumentError(f"seed must be non-negative, got {seed}")
        self.seed = seed & _MASK
        sm = self.seed
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self._s = words

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, algorithm={self.algorithm!r})"

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def integers(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""

        if n <= 0:
            raise ArgumentError(f"integers() needs n >= 1, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def _normal_pair(self) -> tuple[float, float]:
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        return r * math.cos(_TWO_PI * u2), r * math.sin(_TWO_PI * u2)

    def normal(self, loc: float = 0.0, scale: float = 1.0) -> float:
        return loc + scale * self._normal_pair()[0]

    def normal_array(self, shape: Union[int, Sequence[int]], loc: float = 0.0, scale: float = 1.0) -> np.ndarray:
        shape_t = (shape,) if isinstance(shape, int) else tuple(shape)
        count = int(np.prod(shape_t)) if shape_t else 1
        values = []
        while len(values) < count:
            values.extend(self._normal_pair())
        out = np.asarray(values[:count], dtype=np.float64).reshape(shape_t)
        return loc + scale * out

    def uniform_array(self, shape: Union[int, Sequence[int]], low: float = 0.0, high: float = 1.0) -> np.ndarray:
        shape_t = (shape,) if isinstance(shape, int) else tuple(shape)
        count = int(np.prod(shape_t)) if shape_t else 1
        out = np.fromiter((self.uniform() for _ in range(count)), dtype=np.float64, count=count)
        return low + (high - low) * out.reshape(shape_t)

    def choice(self, candidates: Sequence[int]) -> int:
        if len(candidates) == 0:
            raise ArgumentError("choice() over an empty candidate set")
        return int(candidates[self.integers(len(candidates))])

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates shuffle of ``range(n)``."""

        items = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.integers(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def fork(self, key: Union[int, str]) -> "Rng":
        _, mixed = splitmix64(_key_to_int(key))
        _, derived = splitmix64(self.seed ^ mixed)
        return Rng(derived)


__all__ = ["ALGORITHM_ID", "Rng", "splitmix64"]
