"""The six PIR primitives over the reference LWE scheme.

One dimension: the query is an encrypted one-hot vector over all N slots
and the answer is its inner product with every digit column of the
database. Two dimensions: the database is an n1 x n2 grid; the first
selector picks a row, the resulting ciphertexts are decomposed into base-p
digits and treated as a new database whose rows are indexed by the second
selector.
"""

from __future__ import annotations

import hashlib
import struct
import threading
from dataclasses import dataclass, field

import numpy as np

from ..randomness import SecureRandom, default_random
from . import lwe
from .params import LweParams, ParameterError


class PirError(ValueError):
    pass


@dataclass(frozen=True)
class QueryKey:
    secret: np.ndarray
    params: LweParams


@dataclass(frozen=True)
class PublicKey:
    blob: bytes
    params_digest: bytes


@dataclass
class EncodedCache:
    digits: np.ndarray  # (N, digits_per_slot) uint8, slot j at row j - 1
    layout: LweParams

    def copy(self) -> "EncodedCache":
        return EncodedCache(self.digits.copy(), self.layout)


@dataclass(frozen=True)
class PirQuery:
    selectors: tuple  # one (len, n + 1) uint32 array per dimension
    params_digest: bytes


@dataclass(frozen=True)
class PirResponse:
    payload: np.ndarray  # (count, n + 1) uint32
    params_digest: bytes


@dataclass
class OpCounter:
    """Counts plaintext-times-ciphertext multiply-accumulates done by answer()."""

    mul_acc: int = 0
    calls: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add(self, n: int) -> None:
        with self._lock:
            self.mul_acc += n


# -- digit packing -----------------------------------------------------------

def bytes_to_digits(data: bytes, p_bits: int) -> np.ndarray:
    raw = np.frombuffer(data, dtype=np.uint8)
    if p_bits == 8:
        return raw.copy()
    per = 8 // p_bits
    shifts = np.arange(per, dtype=np.uint8) * p_bits
    return ((raw[:, None] >> shifts) & ((1 << p_bits) - 1)).astype(np.uint8).ravel()


def digits_to_bytes(digits: np.ndarray, p_bits: int) -> bytes:
    d = np.asarray(digits, dtype=np.uint8)
    if p_bits == 8:
        return d.tobytes()
    per = 8 // p_bits
    shifts = np.arange(per, dtype=np.uint8) * p_bits
    return (d.reshape(-1, per) << shifts).sum(axis=1).astype(np.uint8).tobytes()


def _words_to_digits(words: np.ndarray, params: LweParams) -> np.ndarray:
    """Split uint32 words into digits_per_word base-p digits, least significant first."""
    shifts = (np.arange(params.digits_per_word, dtype=np.uint32) * params.p_bits)
    return ((words[..., None] >> shifts) & np.uint32(params.p - 1)).astype(np.uint8)


def _digits_to_words(digits: np.ndarray, params: LweParams) -> np.ndarray:
    shifts = (np.arange(params.digits_per_word, dtype=np.uint64) * params.p_bits)
    words = (digits.astype(np.uint64) << shifts).sum(axis=-1)
    return (words & np.uint64(params.q - 1)).astype(np.uint32)


# -- primitives ----------------------------------------------------------------

def _decomposition_blob(params: LweParams) -> bytes:
    if params.dims == 1:
        return b""
    return struct.pack("<BBBII", params.p_bits, params.q_bits, params.digits_per_word, params.n1, params.n2)


def setup_user(n_slots: int, params: LweParams, rng: SecureRandom | None = None) -> tuple[QueryKey, PublicKey]:
    if n_slots != params.n_slots:
        raise ParameterError(f"N={n_slots} does not match params grid {params.n1}x{params.n2}")
    secret = lwe.keygen(params, rng)
    return QueryKey(secret, params), PublicKey(_decomposition_blob(params), params.digest)


def new_encoded_cache(params: LweParams) -> EncodedCache:
    return EncodedCache(np.zeros((params.n_slots, params.digits_per_slot), dtype=np.uint8), params)


def setup_server(cache: EncodedCache, j: int, slot: bytes) -> EncodedCache:
    """Replace slot j (1-based) in place and return the cache."""
    params = cache.layout
    if not 1 <= j <= params.n_slots:
        raise PirError(f"slot index {j} out of range [1, {params.n_slots}]")
    if len(slot) != params.slot_bytes:
        raise PirError(f"slot must be {params.slot_bytes} bytes, got {len(slot)}")
    cache.digits[j - 1] = bytes_to_digits(slot, params.p_bits)
    return cache


def index(keyword: bytes | str, n_slots: int) -> int:
    """SHA-256 of the keyword, first 8 bytes big-endian, mod N, plus one."""
    if isinstance(keyword, str):
        keyword = keyword.encode()
    if not keyword:
        raise PirError("empty keyword")
    h = hashlib.sha256(keyword).digest()
    return int.from_bytes(h[:8], "big") % n_slots + 1


def grid_position(params: LweParams, idx: int) -> tuple[int, int]:
    i = idx - 1
    return i // params.n2, i % params.n2


def query(qk: QueryKey, idx: int, rng: SecureRandom | None = None) -> PirQuery:
    params = qk.params
    if not 1 <= idx <= params.n_slots:
        raise PirError(f"index {idx} out of range [1, {params.n_slots}]")
    rng = rng or default_random()
    row, col = grid_position(params, idx)
    hot = np.zeros(params.n1, dtype=np.int64)
    hot[row] = 1
    selectors = [lwe.encrypt_batch(params, qk.secret, hot, rng)]
    if params.dims == 2:
        hot2 = np.zeros(params.n2, dtype=np.int64)
        hot2[col] = 1
        selectors.append(lwe.encrypt_batch(params, qk.secret, hot2, rng))
    return PirQuery(tuple(selectors), params.digest)


def _check_query(params: LweParams, q: PirQuery) -> None:
    if q.params_digest != params.digest:
        raise PirError("query was built for different parameters")
    sides = (params.n1, params.n2)[: params.dims]
    if len(q.selectors) != params.dims:
        raise PirError("wrong number of selectors")
    for sel, side in zip(q.selectors, sides):
        if sel.shape != (side, params.n + 1):
            raise PirError(f"selector shape {sel.shape} != {(side, params.n + 1)}")


def answer(pk: PublicKey, cache: EncodedCache, q: PirQuery, counter: OpCounter | None = None) -> PirResponse:
    """Homomorphically select one slot; the work is identical for every index."""
    params = cache.layout
    if pk.params_digest != params.digest:
        raise PirError("public key parameters do not match the cache")
    _check_query(params, q)
    D = params.digits_per_slot
    if params.dims == 1:
        out = lwe.plaintext_inner_product(params, cache.digits.T, q.selectors[0])
        if counter is not None:
            counter.add(params.n_slots * D)
    else:
        grid = cache.digits.reshape(params.n1, params.n2 * D)
        inner = lwe.plaintext_inner_product(params, grid.T, q.selectors[0])  # (n2 * D, n + 1)
        folded = _words_to_digits(inner, params).reshape(params.n2, -1)  # one row per column c
        out = lwe.plaintext_inner_product(params, folded.T, q.selectors[1])
        if counter is not None:
            counter.add(params.n1 * params.n2 * D + params.n2 * folded.shape[1])
    if counter is not None:
        with counter._lock:
            counter.calls += 1
    return PirResponse(out, params.digest)


def response_length(params: LweParams) -> int:
    """Ciphertexts in a response."""
    if params.dims == 1:
        return params.digits_per_slot
    return params.digits_per_slot * params.expansion_factor


def extract(qk: QueryKey, r: PirResponse) -> bytes:
    params = qk.params
    if r.params_digest != params.digest:
        raise PirError("response was built for different parameters")
    if r.payload.shape != (response_length(params), params.n + 1):
        raise PirError(f"response shape {r.payload.shape} is malformed")
    if params.dims == 1:
        digits = lwe.decrypt_batch(params, qk.secret, r.payload)
    else:
        outer = lwe.decrypt_batch(params, qk.secret, r.payload)
        outer = outer.reshape(params.digits_per_slot, params.n + 1, params.digits_per_word)
        inner = _digits_to_words(outer, params)
        digits = lwe.decrypt_batch(params, qk.secret, inner)
    return digits_to_bytes(digits, params.p_bits)


def decrypt_selectors(qk: QueryKey, q: PirQuery) -> list[np.ndarray]:
    """Decrypt every selector vector of a query (used by miss-proof checks)."""
    _check_query(qk.params, q)
    return [lwe.decrypt_batch(qk.params, qk.secret, sel) for sel in q.selectors]


def hot_index(qk: QueryKey, q: PirQuery) -> int | None:
    """Slot index a query selects, or None if a selector is not one-hot."""
    sels = decrypt_selectors(qk, q)
    pos = []
    for vec in sels:
        nz = np.flatnonzero(vec)
        if len(nz) != 1 or vec[nz[0]] != 1:
            return None
        pos.append(int(nz[0]))
    col = pos[1] if len(pos) > 1 else 0
    return pos[0] * qk.params.n2 + col + 1
