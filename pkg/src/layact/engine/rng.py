"""Seedable, splittable, counter-based random streams.

Every stochastic operation in the package draws from an explicit RngStream.
Streams are backed by Philox (counter-based, platform-stable); child streams
are derived by hashing the parent key with a name, so the stream tree is a
pure function of (seed, path) and independent of draw order elsewhere.
"""

from __future__ import annotations

import hashlib

import numpy as np


class RngStream:
    """A named random stream with lazy numpy Generator state.

    `child(name)` derives an independent stream deterministically; deriving
    a child does not consume randomness from the parent.
    """

    __slots__ = ("key", "path", "_gen")

    def __init__(self, key: bytes, path: str = "root"):
        if len(key) != 32:
            raise ValueError("stream key must be 32 bytes")
        self.key = key
        self.path = path
        self._gen: np.random.Generator | None = None

    @classmethod
    def from_seed(cls, seed: int, name: str = "root") -> "RngStream":
        key = hashlib.sha256(b"layact-rng:%d:%s" % (seed, name.encode())).digest()
        return cls(key, name)

    def child(self, name: str) -> "RngStream":
        key = hashlib.sha256(self.key + b"/" + name.encode()).digest()
        return RngStream(key, f"{self.path}/{name}")

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            philox_key = int.from_bytes(self.key[:16], "little")
            self._gen = np.random.Generator(np.random.Philox(key=philox_key))
        return self._gen

    # convenience draws -------------------------------------------------

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None) -> np.ndarray:
        return self.generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None) -> np.ndarray:
        return self.generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self.generator.choice(a, size=size, replace=replace)

    def __repr__(self) -> str:
        return f"RngStream({self.path!r})"
