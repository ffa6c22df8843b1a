"""Monotone counters and coarse latency histograms."""

from __future__ import annotations

import bisect
import threading
from collections import defaultdict

BUCKETS_MS = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000)


class Stats:
    def __init__(self):
        self._lock = threading.Lock()
        self._counters: dict[str, int] = defaultdict(int)
        self._hist: dict[str, list[int]] = {}
        self._sum: dict[str, float] = defaultdict(float)

    def incr(self, name: str, by: int = 1) -> None:
        with self._lock:
            self._counters[name] += by

    def set_max(self, name: str, value: int) -> None:
        with self._lock:
            self._counters[name] = max(self._counters[name], value)

    def observe(self, op: str, ms: float) -> None:
        with self._lock:
            hist = self._hist.setdefault(op, [0] * (len(BUCKETS_MS) + 1))
            hist[bisect.bisect_left(BUCKETS_MS, ms)] += 1
            self._sum[op] += ms

    def total_ms(self, op: str) -> float:
        """Sum of every duration observed for ``op`` (for per-request deltas)."""
        with self._lock:
            return self._sum.get(op, 0.0)

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "counters": dict(self._counters),
                "latency_ms": {
                    op: {"buckets": list(BUCKETS_MS) + ["inf"], "counts": list(h), "sum_ms": self._sum[op]}
                    for op, h in self._hist.items()
                },
            }
