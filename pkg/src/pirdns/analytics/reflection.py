"""Reflection traffic toward the resolver under fake cache-miss floods.

Time advances in one-second steps. Each attacker sends
``bandwidth / request_size`` claimed misses per second, spread over the
domains it targets. Without the guard every claim makes the ANS push a
populate message; with it a domain is pushed at most once per TTL.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BITS_PER_GBIT = 1e9


@dataclass
class Attacker:
    start_s: int = 0
    stop_s: int | None = None
    domains: np.ndarray | None = None  # indices into the domain list; None means all


@dataclass
class ReflectionResult:
    times_s: np.ndarray
    bytes_per_s: np.ndarray
    populations: np.ndarray  # per domain
    window_s: int
    per_window_bytes: np.ndarray
    cap_per_window: float

    @property
    def mean_rate(self) -> float:
        return float(self.bytes_per_s.mean())


def reflection_sim(n_attackers: int, ttl_s, populate_size_bytes: float, defense: bool, horizon_s: int,
                   attacker_bw_gbps: float = 1.0, request_size_bytes: float = 100.0,
                   attackers: list[Attacker] | None = None, ans_bw_gbps: float | None = None,
                   window_s: int | None = None) -> ReflectionResult:
    ttl = np.asarray(ttl_s, dtype=np.int64)
    n_dom = ttl.size
    if attackers is None:
        attackers = [Attacker() for _ in range(n_attackers)]
    rate = attacker_bw_gbps * BITS_PER_GBIT / 8 / request_size_bytes  # claims per second per attacker
    cap_rate = None if ans_bw_gbps is None else ans_bw_gbps * BITS_PER_GBIT / 8
    window = int(window_s or ttl.max())

    last = np.full(n_dom, -(1 << 62), dtype=np.int64)
    pops = np.zeros(n_dom, dtype=np.int64)
    out = np.zeros(horizon_s)
    for t in range(horizon_s):
        active = [a for a in attackers if a.start_s <= t and (a.stop_s is None or t < a.stop_s)]
        if not active:
            continue
        if not defense:
            out[t] = len(active) * rate * populate_size_bytes
            if cap_rate is not None:
                out[t] = min(out[t], cap_rate)
            continue
        requested = np.zeros(n_dom, dtype=bool)
        for a in active:
            if a.domains is None:
                requested[:] = True
            else:
                requested[a.domains] = True
        fresh = requested & (t >= last + ttl)
        last[fresh] = t
        pops[fresh] += 1
        out[t] = fresh.sum() * populate_size_bytes
    n_win = -(-horizon_s // window)
    per_window = np.array([out[w * window:(w + 1) * window].sum() for w in range(n_win)])
    if defense:
        cap = float(populate_size_bytes * np.sum(-(-window // ttl)))
    else:
        cap = float("inf")
    return ReflectionResult(np.arange(horizon_s), out, pops, window, per_window, cap)


def random_attack_schedule(rng: np.random.Generator, n_attackers: int, n_domains: int, horizon_s: int,
                           coverage: float = 1.0) -> list[Attacker]:
    out = []
    for _ in range(n_attackers):
        start = int(rng.integers(0, horizon_s))
        stop = int(rng.integers(start + 1, horizon_s + 1))
        k = max(1, int(round(coverage * n_domains * rng.uniform(0.2, 1.0))))
        out.append(Attacker(start, stop, rng.choice(n_domains, size=k, replace=False)))
    return out
