"""In-process 3-tier testbed: root, TLD and final name servers, one resolver, many clients."""

from __future__ import annotations

import hashlib
import ipaddress
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..ans.delay import DelayDistribution
from ..ans.server import AnsConfig, AnsServer
from ..ans.zone import Zone, ZoneRecord
from ..cache.record import A, AAAA, NS, canonical_name
from ..cache.store import CacheConfig
from ..client.proxy import ClientProxy
from ..client.transport import InProcessAns, InProcessResolver
from ..pir.params import LweParams
from ..randomness import SecureRandom
from ..resolver.service import ResolverService
from ..resolver.trust import TrustEntry, TrustRegistry
from .latency import LinkShim, VirtualClock, WallClock, timer_ms

RER_ADDRESS = "10.0.0.1"
ROOT_ADDRESS = "10.0.0.2"
LINKS = ("client_rer", "client_root", "client_tld", "client_final", "final_rer")


@dataclass
class TopologyConfig:
    links: dict = field(default_factory=dict)  # link name -> DelayDistribution (round trip per call)
    answer_latency_override_ms: float | None = None
    n_slots: int = 1024
    slot_bytes: int = 256
    dims: int = 1
    populate_delay: DelayDistribution = field(default_factory=lambda: DelayDistribution.fixed(0))
    latency_mode: str = "virtual"
    default_ttl_s: int = 300
    workers: int = 4

    def __post_init__(self):
        unknown = set(self.links) - set(LINKS)
        if unknown:
            raise ValueError(f"unknown links {sorted(unknown)}")
        self.links = {k: (v if isinstance(v, DelayDistribution) else _dist(v)) for k, v in self.links.items()}
        for name, d in self.links.items():
            if d.kind == "fixed" and d.ms < 0:
                raise ValueError(f"negative delay on {name}")
        if not isinstance(self.populate_delay, DelayDistribution):
            self.populate_delay = _dist(self.populate_delay)

    @classmethod
    def from_dict(cls, data: dict) -> "TopologyConfig":
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "TopologyConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "links": {k: v.to_dict() for k, v in self.links.items()},
            "answer_latency_override_ms": self.answer_latency_override_ms,
            "n_slots": self.n_slots, "slot_bytes": self.slot_bytes, "dims": self.dims,
            "populate_delay": self.populate_delay.to_dict(), "latency_mode": self.latency_mode,
            "default_ttl_s": self.default_ttl_s, "workers": self.workers,
        }


def _dist(v) -> DelayDistribution:
    if isinstance(v, (int, float)):
        return DelayDistribution.fixed(float(v))
    if isinstance(v, str):
        return DelayDistribution.parse(v)
    return DelayDistribution.from_dict(v)


def answer_address(domain: str, rtype: int = A) -> str:
    h = hashlib.sha256(canonical_name(domain).encode()).digest()
    if rtype == AAAA:
        return str(ipaddress.IPv6Address(b"\x20\x01\x0d\xb8" + h[:12]))
    return str(ipaddress.IPv4Address(bytes([100, 64 | (h[0] & 63), h[1], h[2]])))


def split_domain(domain: str) -> tuple[str, str]:
    """(tld, final zone) for a name with at least two labels."""
    labels = canonical_name(domain).split(".")
    if len(labels) < 2:
        raise ValueError(f"{domain} needs at least two labels")
    return labels[-1], ".".join(labels[-2:])


class Testbed:
    __test__ = False  # not a pytest class

    def __init__(self, topology: TopologyConfig, domains: dict[str, int] | list[str], seed: int | None = None,
                 clock=None):
        self.topology = topology
        self.rng = SecureRandom(seed) if seed is not None else SecureRandom()
        if clock is None:
            clock = VirtualClock() if topology.latency_mode == "virtual" else WallClock()
        self.clock = clock
        if not isinstance(domains, dict):
            domains = {d: topology.default_ttl_s for d in domains}
        self.domains = {canonical_name(d): int(t) for d, t in domains.items()}

        params = LweParams.for_cache(topology.n_slots, topology.slot_bytes, dims=topology.dims)
        self.trust = TrustRegistry()
        self.resolver = ResolverService(CacheConfig(topology.n_slots, topology.slot_bytes), params,
                                        trust=self.trust, workers=topology.workers)
        self.tier: dict[str, str] = {RER_ADDRESS: "rer", ROOT_ADDRESS: "root"}
        self.servers: dict[str, AnsServer] = {}
        self.finals: dict[str, AnsServer] = {}
        self._build_zones()

    # -- topology --------------------------------------------------------------------------

    def _build_zones(self) -> None:
        tlds: dict[str, set] = {}
        for d in self.domains:
            tld, zone = split_domain(d)
            tlds.setdefault(tld, set()).add(zone)
        root = Zone("")
        for i, tld in enumerate(sorted(tlds)):
            tld_addr = f"10.0.1.{i + 1}" if i < 254 else f"10.0.{2 + i // 254}.{i % 254 + 1}"
            root.add(ZoneRecord(tld, NS, tld_addr, 172800))
            tzone = Zone(tld)
            for j, fz in enumerate(sorted(tlds[tld])):
                k = len(self.finals)
                fin4 = str(ipaddress.IPv4Address(int(ipaddress.IPv4Address("10.64.0.1")) + k))
                fin6 = str(ipaddress.IPv6Address(int(ipaddress.IPv6Address("fd00::1")) + k))
                tzone.add(ZoneRecord(fz, NS, fin4, 86400))
                self._add_final(fz, fin4, fin6)
            self._add_server(tld_addr, "tld", f"tld-{tld}", tzone)
        self._add_server(ROOT_ADDRESS, "root", "root", root)

    def _add_server(self, address: str, tier: str, identity: str, zone: Zone, address6: str | None = None) -> AnsServer:
        cfg = AnsConfig(identity, zone, address4=address, address6=address6, delay=self.topology.populate_delay)
        server = AnsServer(cfg, sink=self._sink, rer_keys={RER_ADDRESS: self.resolver.signer.public_key},
                           rng=self.rng)
        self.servers[address] = server
        self.tier[address] = tier
        return server

    def _add_final(self, zone_name: str, addr4: str, addr6: str) -> None:
        zone = Zone(zone_name)
        for d, ttl in self.domains.items():
            if d == zone_name or d.endswith("." + zone_name):
                zone.add(ZoneRecord(d, A, answer_address(d, A), ttl))
                zone.add(ZoneRecord(d, AAAA, answer_address(d, AAAA), ttl))
        server = self._add_server(addr4, "final", f"ans-{zone_name}", zone, addr6)
        self.servers[addr6] = server
        self.tier[addr6] = "final"
        self.finals[zone_name] = server
        self.trust.add(zone_name, TrustEntry(server.config.identity, server.verification_key, addr4))

    def _sink(self, rer: str, msg: bytes, sender: str) -> bool:
        if rer != RER_ADDRESS:
            raise ConnectionError(f"unknown resolver {rer}")
        return self.resolver.apply_populate(msg, sender, self.clock()).accepted

    def final_for(self, domain: str) -> AnsServer:
        return self.finals[split_domain(domain)[1]]

    # -- clients -----------------------------------------------------------------------------

    def link_of(self, address: str) -> str:
        return {"root": "client_root", "tld": "client_tld", "final": "client_final"}.get(self.tier.get(address), "")

    def add_client(self, ip: str, backup_pool: int = 2, json_log: bool = False) -> ClientProxy:
        t = self.topology
        resolver = InProcessResolver(self.resolver, ip, self.clock)
        ans = InProcessAns(self.servers, ip, self.clock)
        proxy = ClientProxy(
            LinkShim(resolver, t.links, t.latency_mode, default_link="client_rer",
                     answer_override_ms=t.answer_latency_override_ms, rng=self.rng),
            LinkShim(ans, t.links, t.latency_mode, link_of=self.link_of, rng=self.rng),
            [ROOT_ADDRESS], RER_ADDRESS, backup_pool=backup_pool, rng=self.rng, clock=self.clock,
            timer=timer_ms, json_log=json_log,
        )
        proxy.raw_resolver = resolver
        proxy.raw_ans = ans
        return proxy.setup()

    # -- time ---------------------------------------------------------------------------------

    def run_due(self) -> int:
        now = self.clock()
        return sum(s.dispatcher.run_due(now) for s in set(self.servers.values()))

    def set_time(self, now_ms: int) -> int:
        self.clock.set(now_ms)
        return self.run_due()

    def advance(self, ms: int) -> int:
        self.clock.advance(ms)
        return self.run_due()

    def tier_counts(self) -> dict[str, int]:
        counts = {"root": 0, "tld": 0, "final": 0}
        seen = set()
        for addr, s in self.servers.items():
            if id(s) in seen:
                continue
            seen.add(id(s))
            counts[self.tier[addr]] += s.stats.snapshot()["counters"].get("queries", 0)
        return counts

    def ans_counters(self) -> dict[str, int]:
        total: dict[str, int] = {}
        for s in {id(s): s for s in self.servers.values()}.values():
            for k, v in s.stats.snapshot()["counters"].items():
                total[k] = total.get(k, 0) + v
        return total
