"""Compact cache record codec.

Layout (network byte order), 30-byte fixed header plus rdata::

    digest   16  first 16 bytes of SHA-256(canonical domain name)
    rtype     2  1 = A, 28 = AAAA, 2 = NS (0 is reserved as terminator)
    rclass    2  normally 1 (IN)
    expire    8  absolute expiration, Unix milliseconds
    rdlength  2  length of rdata
    rdata        A: answer IPv4 + final-ANS IPv4 (8 bytes)
                 AAAA: answer IPv6 + final-ANS IPv6 (32 bytes)
                 NS: final-ANS address only (4 or 16 bytes)

An A record is therefore 38 bytes and an AAAA record 62 bytes.
"""

from __future__ import annotations

import hashlib
import ipaddress
import struct
from dataclasses import dataclass

A = 1
NS = 2
AAAA = 28
IN = 1

RTYPE_NAMES = {A: "A", NS: "NS", AAAA: "AAAA"}
RTYPE_CODES = {v: k for k, v in RTYPE_NAMES.items()}

HEADER = struct.Struct("!16sHHQH")
HEADER_SIZE = HEADER.size  # 30


class RecordError(ValueError):
    pass


def canonical_name(domain: str) -> str:
    name = domain.strip().lower().rstrip(".")
    if not name:
        raise RecordError("empty domain name")
    return name


def name_digest(domain: str) -> bytes:
    return hashlib.sha256(canonical_name(domain).encode()).digest()[:16]


@dataclass(frozen=True)
class RecordWire:
    digest: bytes
    rtype: int
    rclass: int
    expire_ts: int
    rdata: bytes

    @property
    def size(self) -> int:
        return HEADER_SIZE + len(self.rdata)

    @property
    def answer_ip(self) -> str | None:
        if self.rtype == NS:
            return None
        half = len(self.rdata) // 2
        return str(ipaddress.ip_address(self.rdata[:half]))

    @property
    def ans_ip(self) -> str:
        if self.rtype == NS:
            return str(ipaddress.ip_address(self.rdata))
        half = len(self.rdata) // 2
        return str(ipaddress.ip_address(self.rdata[half:]))

    def to_bytes(self) -> bytes:
        return HEADER.pack(self.digest, self.rtype, self.rclass, self.expire_ts, len(self.rdata)) + self.rdata


def _packed(addr: str, version: int, what: str) -> bytes:
    ip = ipaddress.ip_address(addr)
    if ip.version != version:
        raise RecordError(f"{what} {addr} is not IPv{version}")
    return ip.packed


def encode_record(domain: str, rtype: int, rclass: int, expire_ts: int,
                  answer_ip: str | None, ans_ip: str) -> RecordWire:
    if rtype == A:
        rdata = _packed(answer_ip, 4, "answer") + _packed(ans_ip, 4, "ANS address")
    elif rtype == AAAA:
        rdata = _packed(answer_ip, 6, "answer") + _packed(ans_ip, 6, "ANS address")
    elif rtype == NS:
        if answer_ip is not None:
            raise RecordError("NS records carry only the ANS address")
        rdata = ipaddress.ip_address(ans_ip).packed
    else:
        raise RecordError(f"unsupported rtype {rtype}")
    if not 0 <= expire_ts < 1 << 64:
        raise RecordError("expire_ts out of range")
    return RecordWire(name_digest(domain), rtype, rclass, int(expire_ts), rdata)


_VALID_RDLENGTH = {A: (8,), AAAA: (32,), NS: (4, 16)}


def decode_record(buf: bytes, offset: int = 0) -> tuple[RecordWire | None, int]:
    """Decode one record at ``offset``; returns (None, offset) at the terminator."""
    if offset + HEADER_SIZE > len(buf):
        return None, offset
    digest, rtype, rclass, expire_ts, rdlength = HEADER.unpack_from(buf, offset)
    if rtype == 0:
        return None, offset
    if rdlength not in _VALID_RDLENGTH.get(rtype, ()):
        raise RecordError(f"rdlength {rdlength} invalid for rtype {rtype}")
    end = offset + HEADER_SIZE + rdlength
    if end > len(buf):
        raise RecordError("record runs past end of buffer")
    rdata = bytes(buf[offset + HEADER_SIZE:end])
    return RecordWire(digest, rtype, rclass, expire_ts, rdata), end
