"""Binary framing for queries, responses and public keys.

Every blob starts with a 4-byte magic and a 1-byte version, followed by the
32-byte parameter digest and a u8 section count. Each section is a u32
byte length followed by its payload. Ciphertext sections hold a u32 row
count, a u32 row width and then row-major little-endian u32 words. All
integers are little-endian.

    magic(4) | version(1) | params_digest(32) | nsections(1) | sections...
"""

from __future__ import annotations

import struct

import numpy as np

from .scheme import PirError, PirQuery, PirResponse, PublicKey

VERSION = 1
QUERY_MAGIC = b"PIRQ"
RESPONSE_MAGIC = b"PIRR"
PUBKEY_MAGIC = b"PIRK"
_HEADER = struct.Struct("<4sB32sB")


class WireError(PirError):
    pass


def _matrix_section(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr, dtype="<u4")
    rows, cols = arr.shape
    return struct.pack("<II", rows, cols) + arr.tobytes()


def _pack(magic: bytes, digest: bytes, sections: list[bytes]) -> bytes:
    out = [_HEADER.pack(magic, VERSION, digest, len(sections))]
    for sec in sections:
        out.append(struct.pack("<I", len(sec)))
        out.append(sec)
    return b"".join(out)


def _unpack(magic: bytes, data: bytes) -> tuple[bytes, list[memoryview]]:
    if len(data) < _HEADER.size:
        raise WireError("truncated header")
    got_magic, version, digest, nsec = _HEADER.unpack_from(data)
    if got_magic != magic:
        raise WireError(f"bad magic {got_magic!r}")
    if version != VERSION:
        raise WireError(f"unsupported version {version}")
    view = memoryview(data)
    off = _HEADER.size
    sections = []
    for _ in range(nsec):
        if off + 4 > len(data):
            raise WireError("truncated section length")
        (length,) = struct.unpack_from("<I", data, off)
        off += 4
        if off + length > len(data):
            raise WireError("truncated section")
        sections.append(view[off:off + length])
        off += length
    if off != len(data):
        raise WireError("trailing bytes")
    return digest, sections


def _matrix(sec: memoryview) -> np.ndarray:
    if len(sec) < 8:
        raise WireError("truncated matrix section")
    rows, cols = struct.unpack_from("<II", sec)
    if len(sec) != 8 + 4 * rows * cols:
        raise WireError("matrix section length mismatch")
    return np.frombuffer(sec[8:], dtype="<u4").reshape(rows, cols).astype(np.uint32)


def dump_query(q: PirQuery) -> bytes:
    return _pack(QUERY_MAGIC, q.params_digest, [_matrix_section(s) for s in q.selectors])


def load_query(data: bytes) -> PirQuery:
    digest, secs = _unpack(QUERY_MAGIC, data)
    if not 1 <= len(secs) <= 2:
        raise WireError("query must carry one or two selectors")
    return PirQuery(tuple(_matrix(s) for s in secs), digest)


def dump_response(r: PirResponse) -> bytes:
    return _pack(RESPONSE_MAGIC, r.params_digest, [_matrix_section(r.payload)])


def load_response(data: bytes) -> PirResponse:
    digest, secs = _unpack(RESPONSE_MAGIC, data)
    if len(secs) != 1:
        raise WireError("response must carry one section")
    return PirResponse(_matrix(secs[0]), digest)


def dump_public_key(pk: PublicKey) -> bytes:
    return _pack(PUBKEY_MAGIC, pk.params_digest, [pk.blob])


def load_public_key(data: bytes) -> PublicKey:
    digest, secs = _unpack(PUBKEY_MAGIC, data)
    if len(secs) != 1:
        raise WireError("public key must carry one section")
    return PublicKey(bytes(secs[0]), digest)
