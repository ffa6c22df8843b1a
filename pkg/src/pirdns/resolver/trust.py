"""Which authoritative server may populate which zones."""

from __future__ import annotations

from dataclasses import dataclass

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PublicKey

from ..cache.record import canonical_name


@dataclass(frozen=True)
class TrustEntry:
    identity: str
    verification_key: Ed25519PublicKey
    endpoint: str


class TrustRegistry:
    """Zone to ANS mapping with longest-suffix matching on labels."""

    def __init__(self):
        self._zones: dict[str, TrustEntry] = {}

    def add(self, zone: str, entry: TrustEntry) -> None:
        self._zones[canonical_name(zone) if zone.strip(".") else ""] = entry

    def lookup(self, domain: str) -> tuple[str, TrustEntry] | None:
        labels = canonical_name(domain).split(".")
        for i in range(len(labels)):
            zone = ".".join(labels[i:])
            if zone in self._zones:
                return zone, self._zones[zone]
        if "" in self._zones:
            return "", self._zones[""]
        return None

    def by_identity(self, identity: str) -> TrustEntry | None:
        for entry in self._zones.values():
            if entry.identity == identity:
                return entry
        return None

    def zones(self) -> dict[str, TrustEntry]:
        return dict(self._zones)
