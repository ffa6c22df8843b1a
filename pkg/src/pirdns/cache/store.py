"""Plaintext cache: a fixed number of slots addressed by the PIR index."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

from ..pir.scheme import index as pir_index
from .record import A, RecordWire, canonical_name, name_digest
from .slot import Lookup, Slot

SNAPSHOT_MAGIC = b"PDNSSNAP"
SNAPSHOT_VERSION = 1
_SNAP_HEADER = struct.Struct("!8sBII")


@dataclass(frozen=True)
class CacheConfig:
    n_slots: int = 1 << 15
    slot_bytes: int = 16 * 1024

    def __post_init__(self):
        if self.n_slots < 1 or self.n_slots & (self.n_slots - 1):
            raise ValueError("n_slots must be a power of two")
        if self.slot_bytes < 1:
            raise ValueError("slot_bytes must be positive")

    @property
    def total_bytes(self) -> int:
        return self.n_slots * self.slot_bytes


def domain_index(domain: str, n_slots: int) -> int:
    return pir_index(canonical_name(domain).encode(), n_slots)


class PlainCache:
    """Slots held as parsed records; empty slots are not materialized."""

    def __init__(self, config: CacheConfig):
        self.config = config
        self._slots: dict[int, Slot] = {}

    def slot(self, j: int) -> Slot:
        return self._slots.get(j) or Slot(self.config.slot_bytes)

    def set_slot(self, j: int, slot: Slot) -> None:
        if slot.records:
            self._slots[j] = slot
        else:
            self._slots.pop(j, None)

    def slot_for(self, domain: str) -> int:
        return domain_index(domain, self.config.n_slots)

    def insert(self, domain: str, rec: RecordWire) -> int:
        j = self.slot_for(domain)
        self.set_slot(j, self.slot(j).insert(rec))
        return j

    def occupied(self) -> list[int]:
        return sorted(self._slots)

    def copy(self) -> "PlainCache":
        other = PlainCache(self.config)
        other._slots = dict(self._slots)
        return other

    def slot_bytes(self, j: int) -> bytes:
        return self.slot(j).to_bytes()

    def dump(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            fh.write(_SNAP_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, self.config.n_slots, self.config.slot_bytes))
            empty = bytes(self.config.slot_bytes)
            for j in range(1, self.config.n_slots + 1):
                s = self._slots.get(j)
                fh.write(s.to_bytes() if s else empty)

    @classmethod
    def load(cls, path: str | Path) -> "PlainCache":
        with open(path, "rb") as fh:
            magic, version, n_slots, slot_bytes = _SNAP_HEADER.unpack(fh.read(_SNAP_HEADER.size))
            if magic != SNAPSHOT_MAGIC or version != SNAPSHOT_VERSION:
                raise ValueError("not a cache snapshot")
            cache = cls(CacheConfig(n_slots, slot_bytes))
            for j in range(1, n_slots + 1):
                data = fh.read(slot_bytes)
                if len(data) != slot_bytes:
                    raise ValueError("truncated snapshot")
                if any(data):
                    cache.set_slot(j, Slot.from_bytes(data))
        return cache


def plain_lookup_oracle(cache: PlainCache, domain: str, now_ms: int, rtype: int = A) -> Lookup:
    """Non-private lookup; only tests and the harness use it to check PIR paths."""
    return cache.slot(cache.slot_for(domain)).find(name_digest(domain), rtype, now_ms)
