"""Secret-key Regev encryption over power-of-two moduli.

Ciphertexts are stored as rows of ``n + 1`` uint32 words: the mask vector
``a`` followed by the body ``b = <a, s> + e + delta * m``. With q = 2**32
the reduction modulo q is plain uint32 wraparound; smaller q are masked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..randomness import SecureRandom, default_random
from .params import LweParams


class NoiseOverflowError(ValueError):
    """Decryption noise left the rounding tolerance (bad params or tampering)."""


@dataclass(frozen=True)
class Ciphertext:
    a: np.ndarray
    b: int

    def to_row(self) -> np.ndarray:
        return np.append(self.a, np.uint32(self.b)).astype(np.uint32)

    @classmethod
    def from_row(cls, row: np.ndarray) -> "Ciphertext":
        return cls(a=np.asarray(row[:-1], dtype=np.uint32), b=int(row[-1]))


def _mask(params: LweParams, x: np.ndarray) -> np.ndarray:
    if params.q_bits < 32:
        x &= np.uint32(params.q - 1)
    return x


def keygen(params: LweParams, rng: SecureRandom | None = None) -> np.ndarray:
    rng = rng or default_random()
    return rng.uniform_mod((params.n,), params.q_bits)


def encrypt_batch(params: LweParams, secret: np.ndarray, messages, rng: SecureRandom | None = None) -> np.ndarray:
    """Encrypt a vector of plaintexts in Z_p into a (len, n + 1) uint32 array."""
    rng = rng or default_random()
    m = np.asarray(messages, dtype=np.int64).ravel() % params.p
    count = m.shape[0]
    # fill whole rows with uniform words; the last column is overwritten by the body
    out = rng.uniform_mod((count, params.n + 1), params.q_bits)
    a = out[:, :-1]
    e = rng.centered_binomial((count,), params.eta)
    body = (a @ secret).astype(np.uint32)  # wraps mod 2**32
    body += (e.astype(np.int64) % (1 << 32)).astype(np.uint32)
    body += (m.astype(np.uint64) * np.uint64(params.delta)).astype(np.uint32)
    out[:, -1] = body
    return _mask(params, out)


def phase(params: LweParams, secret: np.ndarray, cts: np.ndarray) -> np.ndarray:
    """b - <a, s> mod q for every ciphertext row."""
    cts = np.asarray(cts, dtype=np.uint32)
    return _mask(params, cts[:, -1] - (cts[:, :-1] @ secret).astype(np.uint32))


def decrypt_batch(params: LweParams, secret: np.ndarray, cts: np.ndarray, check: bool = True) -> np.ndarray:
    """Round each phase to the nearest multiple of delta; returns digits as int64.

    With ``check`` set, any residual noise at or beyond delta / 4 raises
    NoiseOverflowError instead of silently returning a wrong digit.
    """
    ph = phase(params, secret, cts).astype(np.int64)
    half = params.delta // 2
    digits = ((ph + half) >> (params.q_bits - params.p_bits)) % params.p
    if check:
        resid = ph - digits * params.delta
        resid = (resid + params.q // 2) % params.q - params.q // 2
        worst = int(np.abs(resid).max()) if resid.size else 0
        if worst >= params.delta // 4:
            raise NoiseOverflowError(
                f"residual noise {worst} exceeds tolerance {params.delta // 4}"
            )
    return digits


def noise_of(params: LweParams, secret: np.ndarray, cts: np.ndarray, expected) -> np.ndarray:
    """Signed noise of each ciphertext relative to known plaintexts (test oracle helper)."""
    ph = phase(params, secret, cts).astype(np.int64)
    exp = np.asarray(expected, dtype=np.int64) % params.p
    resid = ph - exp * params.delta
    return (resid + params.q // 2) % params.q - params.q // 2


def enc(params: LweParams, secret: np.ndarray, x: int, rng: SecureRandom | None = None) -> Ciphertext:
    return Ciphertext.from_row(encrypt_batch(params, secret, [x], rng)[0])


def dec(params: LweParams, secret: np.ndarray, ct: Ciphertext) -> int:
    return int(decrypt_batch(params, secret, ct.to_row()[None, :])[0])


def eval_add(params: LweParams, x: Ciphertext, y: Ciphertext) -> Ciphertext:
    row = _mask(params, x.to_row() + y.to_row())
    return Ciphertext.from_row(row)


def eval_pt_mul(params: LweParams, c: int, x: Ciphertext) -> Ciphertext:
    row = _mask(params, x.to_row() * np.uint32(c % params.p))
    return Ciphertext.from_row(row)


def plaintext_inner_product(params: LweParams, plain: np.ndarray, cts: np.ndarray) -> np.ndarray:
    """Compute plain @ cts mod q, for plaintext digits in [0, p).

    ``plain`` has shape (rows, k) and ``cts`` shape (k, n + 1). The
    ciphertext words are split into 16-bit halves so both products run as
    float64 matrix products that stay exact while k * (p - 1) * 2**16 < 2**53.
    """
    plain = np.asarray(plain)
    cts = np.asarray(cts, dtype=np.uint32)
    k = cts.shape[0]
    if k * (params.p - 1) * 0xFFFF >= (1 << 53):
        out = plain.astype(np.uint32) @ cts
        return _mask(params, out)
    pf = plain.astype(np.float64)
    lo = (cts & np.uint32(0xFFFF)).astype(np.float64)
    hi = (cts >> np.uint32(16)).astype(np.float64)
    acc = (pf @ lo).astype(np.uint64)
    acc += (pf @ hi).astype(np.uint64) << np.uint64(16)
    return _mask(params, acc.astype(np.uint32))
