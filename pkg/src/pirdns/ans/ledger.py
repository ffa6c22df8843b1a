"""Per-(resolver, domain) population bookkeeping behind the reflection guard."""

from __future__ import annotations

import threading
from dataclasses import dataclass

from ..cache.record import canonical_name

ALLOW = "allow"
REQUIRE_PROOF = "require_proof"


@dataclass(frozen=True)
class LedgerEntry:
    last_populate_ts: int
    ttl_ms: int

    def covers(self, now_ms: int) -> bool:
        return now_ms < self.last_populate_ts + self.ttl_ms


class PopulationLedger:
    def __init__(self):
        self._lock = threading.Lock()
        self._entries: dict[tuple[str, str], LedgerEntry] = {}

    def get(self, rer: str, domain: str) -> LedgerEntry | None:
        with self._lock:
            return self._entries.get((rer, canonical_name(domain)))

    def record(self, rer: str, domain: str, now_ms: int, ttl_ms: int) -> None:
        with self._lock:
            self._entries[(rer, canonical_name(domain))] = LedgerEntry(now_ms, ttl_ms)

    def claim(self, rer: str, domain: str, now_ms: int, ttl_ms: int) -> str:
        """Atomically check the guard and, when allowed, record the population."""
        key = (rer, canonical_name(domain))
        with self._lock:
            entry = self._entries.get(key)
            if entry is not None and entry.covers(now_ms):
                return REQUIRE_PROOF
            self._entries[key] = LedgerEntry(now_ms, ttl_ms)
            return ALLOW

    def __len__(self) -> int:
        return len(self._entries)


def reflection_guard(state: PopulationLedger, rer: str, domain: str, now_ms: int) -> str:
    entry = state.get(rer, domain)
    return REQUIRE_PROOF if entry is not None and entry.covers(now_ms) else ALLOW
