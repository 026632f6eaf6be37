"""Deterministic random streams.

Every stream is numpy's Philox4x64-10 counter-based generator with the
counter starting at zero and a 128-bit key taken from the first 16 bytes of
``blake2b(label, digest_size=16)`` read as two little-endian uint64 words.
Labels are ASCII strings such as ``"instance:<seed>:<trial>"``.

Raw 64-bit words become uniforms in the open interval (0, 1) as
``((w >> 11) + 0.5) * 2**-53``. Normal variates use the Box-Muller transform
on consecutive uniform pairs ``(u1, u2)``::

    z_even = sqrt(-2 ln u1) * cos(2 pi u2)
    z_odd  = sqrt(-2 ln u1) * sin(2 pi u2)

Only numpy's raw Philox output is relied on, which numpy keeps stable across
releases, so the streams are reproducible on any platform.
"""
from __future__ import annotations

import hashlib

import numpy as np

_TWO_NEG53 = 2.0 ** -53


def derive_key(*parts):
    """128-bit Philox key for a label built from ``parts``."""
    label = ":".join(str(p) for p in parts).encode("ascii")
    digest = hashlib.blake2b(label, digest_size=16).digest()
    return np.frombuffer(digest, dtype="<u8").astype(np.uint64)


def derive_seed(*parts):
    """63-bit integer seed for a label, used to hand seeds to sub-streams."""
    label = ":".join(str(p) for p in parts).encode("ascii")
    digest = hashlib.blake2b(label, digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


class Stream:
    """A keyed Philox stream with uniform and normal draws."""

    def __init__(self, *label):
        self.label = ":".join(str(p) for p in label)
        self._bitgen = np.random.Philox(key=derive_key(*label))

    def raw(self, count):
        return self._bitgen.random_raw(int(count)).astype(np.uint64)

    def uniform(self, count):
        words = self.raw(count)
        return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_NEG53

    def normal(self, count):
        pairs = (int(count) + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log(u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = radius * np.cos(angle)
        z[:, 1] = radius * np.sin(angle)
        return z.ravel()[:count]


class ComponentSampler:
    """Uniform component indices in ``[0, m)``, drawn in blocks.

    Index ``j = floor(u * m)`` for the stream's uniforms ``u``.
    """

    def __init__(self, seed, m, block=1024):
        if m < 1:
            raise ValueError("m must be >= 1")
        self.m = int(m)
        self._stream = Stream("components", int(seed))
        self._block = block
        self._buf = np.empty(0, dtype=np.int64)
        self._pos = 0

    def __call__(self):
        if self._pos >= self._buf.size:
            u = self._stream.uniform(self._block)
            self._buf = np.minimum((u * self.m).astype(np.int64), self.m - 1)
            self._pos = 0
        j = int(self._buf[self._pos])
        self._pos += 1
        return j
