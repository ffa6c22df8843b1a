"""Fixed-size cache slots packing colliding records in expiration order."""

from __future__ import annotations

from dataclasses import dataclass, field

from .record import RecordError, RecordWire, decode_record


class SlotOverflowError(RecordError):
    pass


@dataclass(frozen=True)
class Lookup:
    status: str  # "hit", "expired" or "absent"
    record: RecordWire | None = None

    @property
    def hit(self) -> bool:
        return self.status == "hit"


@dataclass(frozen=True)
class Slot:
    capacity: int
    records: tuple = field(default_factory=tuple)

    @property
    def used(self) -> int:
        return sum(r.size for r in self.records)

    def to_bytes(self) -> bytes:
        body = b"".join(r.to_bytes() for r in self.records)
        return body + bytes(self.capacity - len(body))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Slot":
        records = []
        off = 0
        while True:
            rec, off = decode_record(data, off)
            if rec is None:
                break
            records.append(rec)
        return cls(len(data), tuple(records))

    def insert(self, rec: RecordWire) -> "Slot":
        """Upsert ``rec`` keeping records sorted by expiration.

        The slot behaves as a priority queue: after adding the record, the
        earliest-expiring record is evicted until everything fits. A record
        that itself expires first is the one dropped.
        """
        if rec.size > self.capacity:
            raise SlotOverflowError(f"record of {rec.size} bytes exceeds slot capacity {self.capacity}")
        kept = [r for r in self.records if (r.digest, r.rtype) != (rec.digest, rec.rtype)]
        kept.append(rec)
        kept.sort(key=lambda r: r.expire_ts)  # stable: older entries first among ties
        used = sum(r.size for r in kept)
        while used > self.capacity:
            used -= kept.pop(0).size
        return Slot(self.capacity, tuple(kept))

    def find(self, digest: bytes, rtype: int, now_ms: int) -> Lookup:
        for rec in self.records:
            if rec.digest == digest and rec.rtype == rtype:
                if rec.expire_ts > now_ms:
                    return Lookup("hit", rec)
                return Lookup("expired", rec)
        return Lookup("absent")


def insert(slot: Slot, rec: RecordWire) -> Slot:
    return slot.insert(rec)


def find(slot: Slot, digest: bytes, rtype: int, now_ms: int) -> Lookup:
    return slot.find(digest, rtype, now_ms)
