"""EDNS-PR: an EDNS(0) option naming the resolver a final ANS should populate.

Option data (network byte order)::

    family   u16   1 = IPv4, 2 = IPv6 (address family numbers)
    flags    u8    bit 0x01: challenge, set only by the ANS in responses
    address  4 or 16 bytes, the full resolver address (never a prefix)
"""

from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass

import dns.edns
import dns.message

EDNS_PR_CODE = 65001
FLAG_CHALLENGE = 0x01
_FAMILY_LEN = {1: 4, 2: 16}


class EdnsPrError(ValueError):
    pass


@dataclass(frozen=True)
class EdnsPrOption:
    rer_address: str
    challenge: bool = False
    code: int = EDNS_PR_CODE

    @property
    def family(self) -> int:
        return 1 if ipaddress.ip_address(self.rer_address).version == 4 else 2

    def to_bytes(self) -> bytes:
        flags = FLAG_CHALLENGE if self.challenge else 0
        return struct.pack("!HB", self.family, flags) + ipaddress.ip_address(self.rer_address).packed

    def to_option(self) -> dns.edns.GenericOption:
        return dns.edns.GenericOption(self.code, self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes, code: int = EDNS_PR_CODE) -> "EdnsPrOption":
        if len(data) < 3:
            raise EdnsPrError("EDNS-PR option too short")
        family, flags = struct.unpack_from("!HB", data)
        if family not in _FAMILY_LEN:
            raise EdnsPrError(f"unknown address family {family}")
        if len(data) != 3 + _FAMILY_LEN[family]:
            raise EdnsPrError("EDNS-PR address length does not match family")
        if flags & ~FLAG_CHALLENGE:
            raise EdnsPrError("reserved EDNS-PR flag bits set")
        addr = str(ipaddress.ip_address(bytes(data[3:])))
        return cls(addr, bool(flags & FLAG_CHALLENGE), code)


def find_option(msg: dns.message.Message, code: int = EDNS_PR_CODE) -> EdnsPrOption | None:
    """Return the EDNS-PR option of ``msg`` or None; raises EdnsPrError if it is malformed."""
    for opt in msg.options or ():
        if opt.otype == code:
            return EdnsPrOption.from_bytes(opt.to_wire(), code)
    return None


def attach(msg: dns.message.Message, option: EdnsPrOption) -> dns.message.Message:
    others = [o for o in (msg.options or ()) if o.otype != option.code]
    msg.use_edns(0, options=others + [option.to_option()])
    return msg
