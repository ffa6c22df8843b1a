"""DNS workload traces: a JSONL format, a CSV importer and a Zipf synthesizer.

One JSON object per line::

    {"timestamp_ms": 1250, "client_id": "c3", "domain": "site17.com", "rtype": "A", "ttl_s": 300}

``ttl_s`` is optional and only tells the testbed what TTL to serve for that
domain. Timestamps are relative milliseconds and never decrease.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..cache.record import A, AAAA, canonical_name

RTYPES = {"A": A, "AAAA": AAAA}
RTYPE_NAMES = {v: k for k, v in RTYPES.items()}
DEFAULT_TTLS = ((30, 0.1), (60, 0.15), (300, 0.4), (900, 0.15), (3600, 0.2))
TLDS = ("com", "net", "org", "io")


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class TraceEvent:
    timestamp_ms: int
    client_id: str
    domain: str
    rtype: int = A
    ttl_s: int | None = None

    def to_json(self) -> str:
        d = asdict(self)
        d["rtype"] = RTYPE_NAMES[self.rtype]
        if d["ttl_s"] is None:
            del d["ttl_s"]
        return json.dumps(d, separators=(",", ":"))


def _rtype(v) -> int:
    if isinstance(v, int) and v in RTYPE_NAMES:
        return v
    if isinstance(v, str) and v.upper() in RTYPES:
        return RTYPES[v.upper()]
    raise TraceError(f"unsupported rtype {v!r}")


def _event(d: dict, where: str) -> TraceEvent:
    try:
        ts = int(d["timestamp_ms"])
        ev = TraceEvent(ts, str(d["client_id"]), canonical_name(str(d["domain"])),
                        _rtype(d.get("rtype", "A")), None if d.get("ttl_s") is None else int(d["ttl_s"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceError(f"{where}: bad event {d!r}: {exc}") from exc
    if ts < 0 or not ev.domain:
        raise TraceError(f"{where}: bad event {d!r}")
    return ev


def check_order(events: list[TraceEvent]) -> list[TraceEvent]:
    for i in range(1, len(events)):
        if events[i].timestamp_ms < events[i - 1].timestamp_ms:
            raise TraceError(f"timestamp goes backwards at event {i}")
    return events


def read_jsonl(path) -> list[TraceEvent]:
    events = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceError(f"line {n}: {exc}") from exc
            events.append(_event(d, f"line {n}"))
    return check_order(events)


def write_jsonl(events, path) -> None:
    Path(path).write_text(dumps(events))


def read_csv(path) -> list[TraceEvent]:
    """Import ``ts,client,domain[,rtype]`` rows; a header row is skipped if present."""
    events = []
    with open(path, newline="") as fh:
        for n, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            if n == 1 and not row[0].strip().lstrip("-").isdigit():
                continue
            if len(row) < 3:
                raise TraceError(f"row {n}: need ts, client, domain")
            d = {"timestamp_ms": row[0], "client_id": row[1].strip(), "domain": row[2].strip()}
            if len(row) > 3 and row[3].strip():
                d["rtype"] = row[3].strip()
            events.append(_event(d, f"row {n}"))
    return check_order(events)


def read_trace(path) -> list[TraceEvent]:
    return read_csv(path) if str(path).endswith(".csv") else read_jsonl(path)


def domain_ttls(events, default_ttl_s: int) -> dict[str, int]:
    out: dict[str, int] = {}
    for e in events:
        out.setdefault(e.domain, e.ttl_s if e.ttl_s is not None else default_ttl_s)
    return out


def zipf_weights(n: int, s: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def synth_domains(n: int) -> list[str]:
    return [f"site{k}.{TLDS[k % len(TLDS)]}" for k in range(n)]


def synth_trace(n_clients: int, domains, zipf_s: float = 1.0, ttls=DEFAULT_TTLS, rate_qps: float = 10.0,
                duration_s: float = 60.0, seed: int = 0, aaaa_fraction: float = 0.0) -> list[TraceEvent]:
    """Poisson-like arrivals with Zipf(s) domain popularity.

    ``domains`` is a count or a list of names, most popular first. ``ttls``
    is a sequence of (ttl_s, weight). Exactly round(rate * duration)
    events are produced, at sorted uniform times, so the count is exact.
    """
    rng = np.random.default_rng(seed)
    if isinstance(domains, int):
        domains = synth_domains(domains)
    domains = [canonical_name(d) for d in domains]
    if n_clients < 1 or not domains:
        raise ValueError("need at least one client and one domain")
    ttl_vals = np.array([t for t, _ in ttls])
    ttl_p = np.array([w for _, w in ttls], dtype=float)
    dom_ttl = rng.choice(ttl_vals, size=len(domains), p=ttl_p / ttl_p.sum())
    count = int(round(rate_qps * duration_s))
    times = np.sort(rng.integers(0, int(duration_s * 1000), size=count))
    picks = rng.choice(len(domains), size=count, p=zipf_weights(len(domains), zipf_s))
    clients = rng.integers(0, n_clients, size=count)
    six = rng.random(count) < aaaa_fraction
    return [TraceEvent(int(t), f"c{c}", domains[d], AAAA if v6 else A, int(dom_ttl[d]))
            for t, c, d, v6 in zip(times, clients, picks, six)]


def dumps(events) -> str:
    buf = io.StringIO()
    for e in events:
        buf.write(e.to_json() + "\n")
    return buf.getvalue()
