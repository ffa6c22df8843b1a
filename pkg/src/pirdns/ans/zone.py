"""Zone data for the mock authoritative servers.

One record per line, ``#`` starts a comment::

    domain  rtype  value  ttl_seconds

``rtype`` is A, AAAA or NS. An NS line delegates ``domain`` to a child
server and its value is that server's address (glue), e.g.
``example.com NS 10.0.0.3 86400`` in the ``com`` zone file. The first
``$ORIGIN`` line names the served zone; without one the zone is the root.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass
from pathlib import Path

from ..cache.record import A, AAAA, NS, RTYPE_CODES, canonical_name


class ZoneError(ValueError):
    pass


@dataclass(frozen=True)
class ZoneRecord:
    name: str
    rtype: int
    value: str
    ttl: int  # seconds


def _canon(name: str) -> str:
    return "" if name.strip() in ("", ".", "@") else canonical_name(name)


def in_zone(name: str, zone: str) -> bool:
    return zone == "" or name == zone or name.endswith("." + zone)


class Zone:
    def __init__(self, origin: str = "", records=()):
        self.origin = _canon(origin)
        self._records: dict[tuple[str, int], list[ZoneRecord]] = {}
        for rec in records:
            self.add(rec)

    def add(self, rec: ZoneRecord) -> None:
        name = _canon(rec.name)
        if not in_zone(name, self.origin):
            raise ZoneError(f"{rec.name} is outside zone {self.origin or '.'}")
        if rec.rtype not in (A, AAAA, NS):
            raise ZoneError(f"unsupported rtype {rec.rtype}")
        if rec.ttl <= 0:
            raise ZoneError("ttl must be positive")
        ip = ipaddress.ip_address(rec.value)
        if (rec.rtype == A and ip.version != 4) or (rec.rtype == AAAA and ip.version != 6):
            raise ZoneError(f"{rec.value} does not fit rtype {rec.rtype}")
        self._records.setdefault((name, rec.rtype), []).append(ZoneRecord(name, rec.rtype, rec.value, rec.ttl))

    def serves(self, name: str) -> bool:
        return in_zone(_canon(name), self.origin)

    def delegation(self, name: str) -> list[ZoneRecord]:
        """NS records of the closest child zone containing ``name``, or []."""
        name = _canon(name)
        labels = name.split(".") if name else []
        # walk from the apex towards the leaf so the first cut wins
        for i in range(len(labels) - 1, -1, -1):
            cut = ".".join(labels[i:])
            if cut == self.origin:
                continue
            recs = self._records.get((cut, NS))
            if recs:
                return list(recs)
        return []

    def lookup(self, name: str, rtype: int) -> list[ZoneRecord]:
        return list(self._records.get((_canon(name), rtype), ()))

    def has_name(self, name: str) -> bool:
        name = _canon(name)
        return any(n == name for n, _ in self._records)

    def names(self) -> list[str]:
        return sorted({n for n, t in self._records if t != NS})

    @classmethod
    def parse(cls, text: str, origin: str | None = None) -> "Zone":
        zone = None if origin is None else cls(origin)
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "$ORIGIN":
                if zone is not None:
                    raise ZoneError(f"line {lineno}: $ORIGIN must come first")
                zone = cls(parts[1] if len(parts) > 1 else "")
                continue
            if zone is None:
                zone = cls("")
            if len(parts) != 4:
                raise ZoneError(f"line {lineno}: expected 'domain rtype value ttl'")
            name, rtype, value, ttl = parts
            if rtype.upper() not in RTYPE_CODES:
                raise ZoneError(f"line {lineno}: unsupported rtype {rtype}")
            try:
                zone.add(ZoneRecord(name, RTYPE_CODES[rtype.upper()], value, int(ttl)))
            except ValueError as exc:
                raise ZoneError(f"line {lineno}: {exc}") from exc
        return zone if zone is not None else cls("")

    @classmethod
    def load(cls, path: str | Path) -> "Zone":
        return cls.parse(Path(path).read_text())

    def dump(self) -> str:
        lines = [f"$ORIGIN {self.origin or '.'}"]
        for recs in self._records.values():
            for r in recs:
                lines.append(f"{r.name or '.'} {_rtype_name(r.rtype)} {r.value} {r.ttl}")
        return "\n".join(lines) + "\n"


def _rtype_name(rtype: int) -> str:
    return {A: "A", AAAA: "AAAA", NS: "NS"}[rtype]
