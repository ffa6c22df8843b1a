"""How much the resolver-visible query pattern differs from the real one.

Domains are ranked by frequency in the full trace and again by frequency
among the events a name server sees (the misses). For every domain that
appears in both, |rank difference| is recorded.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np


@dataclass
class RankDisruption:
    diffs: np.ndarray  # sorted |rank difference|, one per visible domain
    empty: bool  # nothing was visible, so disruption is undefined

    def cdf(self) -> tuple[np.ndarray, np.ndarray]:
        if self.empty:
            return np.array([]), np.array([])
        x = np.unique(self.diffs)
        return x, np.searchsorted(self.diffs, x, side="right") / self.diffs.size

    @property
    def median(self) -> float:
        return float("nan") if self.empty else float(np.median(self.diffs))


def ranks(domains) -> dict[str, int]:
    """Rank 1 = most frequent; ties broken by name so ranks are deterministic."""
    counts = Counter(domains)
    order = sorted(counts, key=lambda d: (-counts[d], d))
    return {d: i + 1 for i, d in enumerate(order)}


def rank_disruption(all_domains, visible_domains) -> RankDisruption:
    visible = list(visible_domains)
    if not visible:
        return RankDisruption(np.array([], dtype=int), True)
    full = ranks(all_domains)
    seen = ranks(visible)
    diffs = np.sort(np.array([abs(full[d] - r) for d, r in seen.items() if d in full], dtype=int))
    return RankDisruption(diffs, diffs.size == 0)


def from_report(report) -> RankDisruption:
    """Visible events are those that reached a name server (anything but a PIR hit)."""
    return rank_disruption([r.domain for r in report.records],
                           [r.domain for r in report.records if r.source != "pir_hit"])
