"""Trace-driven runs over the in-process testbed."""

from __future__ import annotations

import csv
import io
import ipaddress
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..cache.record import A
from .latency import virtual_ms
from .testbed import Testbed, TopologyConfig
from .trace import RTYPE_NAMES, TraceEvent, domain_ttls

PERCENTILES = (50, 90, 95, 99)


@dataclass
class QueryRecord:
    timestamp_ms: int
    client_id: str
    domain: str
    rtype: str
    source: str
    cache_status: str
    latency_ms: float
    injected_ms: float  # link delay charged during this resolution
    self_ms: float  # client PIR work + resolver and name-server self-timing
    local_ms: float
    rcode: str
    hops: int
    challenged: bool = False
    proof_accepted: bool | None = None


@dataclass
class ExperimentReport:
    records: list[QueryRecord]
    percentiles_ms: dict
    miss_rate: float
    miss_causes: dict
    sources: dict
    ans_counters: dict
    tier_counts: dict
    resolver_counters: dict
    conserved: bool
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("records")
        d["events"] = len(self.records)
        return d

    def records_csv(self) -> str:
        buf = io.StringIO()
        cols = list(QueryRecord.__dataclass_fields__)
        w = csv.writer(buf)
        w.writerow(cols)
        for r in self.records:
            w.writerow([getattr(r, c) for c in cols])
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def client_ip(k: int) -> str:
    return str(ipaddress.IPv4Address(int(ipaddress.IPv4Address("10.128.0.1")) + k))


def _component_ms(tb: Testbed) -> float:
    total = tb.resolver.handler.stats.total_ms("query")
    for s in {id(s): s for s in tb.servers.values()}.values():
        total += s.stats.total_ms("serve") + s.stats.total_ms("proof")
    return total


def run_experiment(topology: TopologyConfig, trace: list[TraceEvent], duration_ms: int | None = None,
                   seed: int | None = None, backup_pool: int = 2) -> ExperimentReport:
    """Replay the trace in timestamp order on a virtual clock.

    Each event sets the protocol clock to trace start + timestamp, releases
    any populates that have come due, then resolves through that client's
    proxy. One record per event is collected.
    """
    events = [e for e in trace if duration_ms is None or e.timestamp_ms < duration_ms]
    tb = Testbed(topology, domain_ttls(events, topology.default_ttl_s) or {"example.com": topology.default_ttl_s},
                 seed=seed)
    start = tb.clock()
    proxies = {}
    records = []
    for e in events:
        tb.set_time(start + e.timestamp_ms)
        proxy = proxies.get(e.client_id)
        if proxy is None:
            proxy = proxies[e.client_id] = tb.add_client(client_ip(len(proxies)), backup_pool)
        inj0 = virtual_ms()
        comp0 = _component_ms(tb)
        out = proxy.resolve(e.domain, e.rtype)
        records.append(QueryRecord(
            e.timestamp_ms, e.client_id, e.domain, RTYPE_NAMES.get(e.rtype, str(e.rtype)), out.source,
            out.cache_status, out.latency_ms, virtual_ms() - inj0,
            out.local_ms + _component_ms(tb) - comp0, out.local_ms, out.rcode, len(out.hops),
            out.challenge is not None, None if out.challenge is None else out.challenge.accepted,
        ))
    return summarize(records, tb)


def summarize(records: list[QueryRecord], tb: Testbed | None = None) -> ExperimentReport:
    lat = np.array([r.latency_ms for r in records]) if records else np.zeros(1)
    pct = {f"p{p}": float(np.percentile(lat, p)) for p in PERCENTILES}
    pct["mean"] = float(lat.mean())
    status = {"hit": 0, "expired": 0, "absent": 0}
    sources: dict[str, int] = {}
    for r in records:
        status[r.cache_status] = status.get(r.cache_status, 0) + 1
        sources[r.source] = sources.get(r.source, 0) + 1
    misses = status["expired"] + status["absent"]
    causes = {k: status[k] for k in ("expired", "absent")}
    causes["expired_share"] = status["expired"] / misses if misses else 0.0
    return ExperimentReport(
        records=records, percentiles_ms=pct, miss_rate=misses / len(records) if records else 0.0,
        miss_causes=causes, sources=sources,
        ans_counters=tb.ans_counters() if tb else {}, tier_counts=tb.tier_counts() if tb else {},
        resolver_counters=tb.resolver.stats()["counters"] if tb else {},
        conserved=sum(status.values()) == len(records),
        extra={"hit": status["hit"]},
    )


def hot_domain_trace(domain: str = "hot.example.com", clients=("a", "b"), gap_ms: int = 10) -> list[TraceEvent]:
    return [TraceEvent(i * gap_ms, c, domain, A) for i, c in enumerate(clients)]
