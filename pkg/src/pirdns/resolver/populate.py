"""Signed cache-population messages sent from an ANS to a resolver.

Wire layout (network byte order)::

    magic "PPOP" | version u8 | sender (u8 len + utf8) | count u16 |
    count x record | signature (64 bytes, Ed25519 over everything before it)

    record = domain (u8 len + utf8) | rtype u16 | rclass u16 | expire_ts u64 |
             answer (u8 len + text address, empty for NS) | ans (u8 len + text address)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

MAGIC = b"PPOP"
VERSION = 1
SIG_LEN = 64


class PopulateFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PopulateRecord:
    domain: str
    rtype: int
    rclass: int
    expire_ts: int
    answer_ip: str | None
    ans_ip: str


@dataclass(frozen=True)
class PopulateMessage:
    sender: str
    records: tuple
    signature: bytes = b""

    def body(self) -> bytes:
        parts = [MAGIC, struct.pack("!B", VERSION), _s(self.sender), struct.pack("!H", len(self.records))]
        for r in self.records:
            parts += [
                _s(r.domain), struct.pack("!HHQ", r.rtype, r.rclass, r.expire_ts),
                _s(r.answer_ip or ""), _s(r.ans_ip),
            ]
        return b"".join(parts)

    def to_bytes(self) -> bytes:
        return self.body() + self.signature

    def signed(self, key: Ed25519PrivateKey) -> "PopulateMessage":
        return PopulateMessage(self.sender, self.records, key.sign(self.body()))

    def verify(self, key: Ed25519PublicKey) -> bool:
        if len(self.signature) != SIG_LEN:
            return False
        try:
            key.verify(self.signature, self.body())
        except InvalidSignature:
            return False
        return True

    @classmethod
    def from_bytes(cls, data: bytes) -> "PopulateMessage":
        try:
            if data[:4] != MAGIC or data[4] != VERSION:
                raise PopulateFormatError("bad populate header")
            off = 5
            sender, off = _read_s(data, off)
            (count,) = struct.unpack_from("!H", data, off)
            off += 2
            records = []
            for _ in range(count):
                domain, off = _read_s(data, off)
                rtype, rclass, expire = struct.unpack_from("!HHQ", data, off)
                off += 12
                answer, off = _read_s(data, off)
                ans, off = _read_s(data, off)
                records.append(PopulateRecord(domain, rtype, rclass, expire, answer or None, ans))
        except (struct.error, IndexError, UnicodeDecodeError) as exc:
            raise PopulateFormatError(f"malformed populate message: {exc}") from exc
        sig = data[off:]
        if len(sig) not in (0, SIG_LEN):
            raise PopulateFormatError("bad signature length")
        return cls(sender, tuple(records), bytes(sig))


def _s(text: str) -> bytes:
    raw = text.encode()
    if len(raw) > 255:
        raise PopulateFormatError("field too long")
    return struct.pack("!B", len(raw)) + raw


def _read_s(data: bytes, off: int) -> tuple[str, int]:
    n = data[off]
    end = off + 1 + n
    if end > len(data):
        raise PopulateFormatError("truncated field")
    return data[off + 1:end].decode(), end
