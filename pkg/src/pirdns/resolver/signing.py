"""Ed25519 transcript signatures binding (client IP, time, query, response)."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

TRANSCRIPT_CONTEXT = b"pirdns-transcript-v1"


def public_bytes(key: Ed25519PublicKey) -> bytes:
    return key.public_bytes(Encoding.Raw, PublicFormat.Raw)


def load_public(raw: bytes) -> Ed25519PublicKey:
    return Ed25519PublicKey.from_public_bytes(raw)


def key_id(key: Ed25519PublicKey | bytes) -> bytes:
    raw = key if isinstance(key, bytes) else public_bytes(key)
    return hashlib.sha256(raw).digest()[:8]


def _lp(data: bytes) -> bytes:
    return struct.pack("!H", len(data)) + data


def transcript_message(client_ip: str, timestamp_ms: int, q_digest: bytes, r_digest: bytes) -> bytes:
    """Canonical encoding: context, then fixed-order length-prefixed fields."""
    return b"".join([
        _lp(TRANSCRIPT_CONTEXT),
        _lp(client_ip.encode()),
        _lp(struct.pack("!Q", timestamp_ms)),
        _lp(q_digest),
        _lp(r_digest),
    ])


@dataclass(frozen=True)
class TranscriptSignature:
    signer: bytes  # 8-byte key id
    client_ip: str
    timestamp_ms: int
    q_digest: bytes
    r_digest: bytes
    signature: bytes

    @property
    def message(self) -> bytes:
        return transcript_message(self.client_ip, self.timestamp_ms, self.q_digest, self.r_digest)

    def verify(self, key: Ed25519PublicKey) -> bool:
        if key_id(key) != self.signer:
            return False
        try:
            key.verify(self.signature, self.message)
        except InvalidSignature:
            return False
        return True

    def binds(self, client_ip: str, timestamp_ms: int, q_bytes: bytes, r_bytes: bytes) -> bool:
        return (
            self.client_ip == client_ip
            and self.timestamp_ms == timestamp_ms
            and self.q_digest == hashlib.sha256(q_bytes).digest()
            and self.r_digest == hashlib.sha256(r_bytes).digest()
        )

    def to_bytes(self) -> bytes:
        ip = self.client_ip.encode()
        return (
            self.signer + struct.pack("!B", len(ip)) + ip + struct.pack("!Q", self.timestamp_ms)
            + self.q_digest + self.r_digest + self.signature
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "TranscriptSignature":
        if len(data) < 9:
            raise ValueError("truncated transcript signature")
        signer = data[:8]
        iplen = data[8]
        off = 9 + iplen
        if len(data) != off + 8 + 32 + 32 + 64:
            raise ValueError("transcript signature length mismatch")
        ip = data[9:off].decode()
        (ts,) = struct.unpack_from("!Q", data, off)
        off += 8
        return cls(signer, ip, ts, data[off:off + 32], data[off + 32:off + 64], data[off + 64:])


class TranscriptSigner:
    def __init__(self, key: Ed25519PrivateKey | None = None):
        self._key = key or Ed25519PrivateKey.generate()
        self.public_key = self._key.public_key()
        self.key_id = key_id(self.public_key)

    def sign(self, client_ip: str, timestamp_ms: int, q_bytes: bytes, r_bytes: bytes) -> TranscriptSignature:
        qd = hashlib.sha256(q_bytes).digest()
        rd = hashlib.sha256(r_bytes).digest()
        sig = self._key.sign(transcript_message(client_ip, timestamp_ms, qd, rd))
        return TranscriptSignature(self.key_id, client_ip, timestamp_ms, qd, rd, sig)
