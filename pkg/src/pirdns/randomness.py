"""Cryptographically secure randomness shared by every component.

Small requests come from ``os.urandom``; bulk requests (LWE masks) use an
AES-256-CTR keystream under a fresh ``os.urandom`` key, which is several
times faster. Passing a seed derives every key from SHAKE-256 instead,
which is only meant for reproducing test failures; production code paths
never pass one.
"""

from __future__ import annotations

import hashlib
import math
import os
import struct

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

BULK_BYTES = 4096
_zeros = np.zeros(0, dtype=np.uint8)  # shared, read-only plaintext for the keystream


def _zero_input(n: int) -> memoryview:
    global _zeros
    if _zeros.size < n:
        _zeros = np.zeros(max(n, 2 * _zeros.size), dtype=np.uint8)
    return memoryview(_zeros)[:n]


class SecureRandom:
    def __init__(self, seed: bytes | int | None = None):
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "little", signed=False)
        self._seed = seed
        self._counter = 0

    @property
    def seeded(self) -> bool:
        return self._seed is not None

    def _fresh(self, n: int) -> bytes:
        if self._seed is None:
            return os.urandom(n)
        block = self._seed + self._counter.to_bytes(8, "little")
        self._counter += 1
        return hashlib.shake_256(block).digest(n)

    def bytes(self, n: int) -> bytes:
        if n <= 0:
            return b""
        if n < BULK_BYTES:
            return self._fresh(n)
        return self._keystream(n).tobytes()

    def _keystream(self, n: int) -> np.ndarray:
        key = self._fresh(48)
        enc = Cipher(algorithms.AES(key[:32]), modes.CTR(key[32:])).encryptor()
        out = np.empty(n + 15, dtype=np.uint8)  # update_into wants block_size - 1 spare bytes
        enc.update_into(_zero_input(n), out)
        return out[:n]

    def fill(self, buf) -> None:
        """Overwrite a writable buffer with keystream bytes."""
        view = memoryview(buf).cast("B")
        view[:] = self._keystream(len(view)).data

    def uint32(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        return self._keystream(4 * count).view("<u4").reshape(shape)

    def uniform_mod(self, shape, modulus_bits: int) -> np.ndarray:
        """Uniform integers in [0, 2**modulus_bits) as uint32."""
        vals = self.uint32(shape)
        if modulus_bits < 32:
            vals &= np.uint32((1 << modulus_bits) - 1)
        return vals

    def centered_binomial(self, shape, eta: int) -> np.ndarray:
        """Centered binomial samples with variance eta / 2, as int64."""
        count = int(np.prod(shape))
        nbytes = (2 * eta + 7) // 8
        raw = np.frombuffer(self.bytes(count * nbytes), dtype=np.uint8)
        bits = np.unpackbits(raw.reshape(count, nbytes), axis=1)
        pos = bits[:, :eta].sum(axis=1, dtype=np.int64)
        neg = bits[:, eta:2 * eta].sum(axis=1, dtype=np.int64)
        return (pos - neg).reshape(shape)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        (word,) = struct.unpack("<Q", self.bytes(8))
        return (word >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        k = max(1, n.bit_length())
        nbytes = (k + 7) // 8
        while True:
            v = int.from_bytes(self.bytes(nbytes), "little") >> (8 * nbytes - k)
            if v < n:
                return v

    def geometric(self, p: float) -> int:
        """Number of Bernoulli(p) trials up to the first success (support 1, 2, ...)."""
        if not 0 < p <= 1:
            raise ValueError("geometric p must be in (0, 1]")
        if p == 1:
            return 1
        u = 1.0 - self.random()  # (0, 1]
        return max(1, math.ceil(math.log(u) / math.log1p(-p)))


_default = SecureRandom()


def default_random() -> SecureRandom:
    return _default
