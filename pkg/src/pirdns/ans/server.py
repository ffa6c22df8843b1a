"""Mock authoritative name server with EDNS-PR cache population."""

from __future__ import annotations

import heapq
import itertools
import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Callable

import dns.flags
import dns.message
import dns.rcode
import dns.rdatatype
import dns.rrset
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from ..cache.record import A, AAAA, IN, canonical_name
from ..randomness import SecureRandom, default_random
from ..resolver.populate import PopulateMessage, PopulateRecord
from ..resolver.stats import Stats
from .delay import DelayDistribution
from .edns import EdnsPrError, EdnsPrOption, attach, find_option
from .ledger import ALLOW, PopulationLedger
from .proof import FRESHNESS_MS, MALFORMED, MissProof, ProofFormatError, ProofVerdict, verify_miss_proof
from .zone import Zone

log = logging.getLogger(__name__)

# sink(rer_address, populate message bytes, sender identity) -> accepted; raising means unreachable
PopulateSink = Callable[[str, bytes, str], bool]


def now_ms() -> int:
    return int(time.time() * 1000)


class PopulateDispatcher:
    """Delayed delivery of populate messages.

    Due messages sit in a heap. In manual mode the owner calls
    ``run_due(now)``; ``start()`` adds a timer thread driven by the wall
    clock. Failed deliveries are retried with exponential backoff and
    dropped (and counted) after ``max_retries``.
    """

    def __init__(self, sink: PopulateSink, sender: str, max_retries: int = 3, backoff_ms: int = 100,
                 stats: Stats | None = None):
        self.sink = sink
        self.sender = sender
        self.max_retries = max_retries
        self.backoff_ms = backoff_ms
        self.stats = stats or Stats()
        self._heap: list = []
        self._seq = itertools.count()
        self._cv = threading.Condition()
        self._thread: threading.Thread | None = None
        self._stop = False

    def submit(self, due_ms: float, rer: str, msg: bytes, attempt: int = 0) -> None:
        with self._cv:
            heapq.heappush(self._heap, (due_ms, next(self._seq), rer, msg, attempt))
            self._cv.notify()

    def deliver(self, rer: str, msg: bytes, now: float, attempt: int = 0) -> bool:
        try:
            ok = self.sink(rer, msg, self.sender)
        except Exception as exc:  # unreachable resolver: retry later
            if attempt + 1 > self.max_retries:
                self.stats.incr("populates_dropped")
                log.warning("dropping populate for %s after %d attempts: %s", rer, attempt + 1, exc)
                return False
            self.stats.incr("populates_retried")
            self.submit(now + self.backoff_ms * 2 ** attempt, rer, msg, attempt + 1)
            return False
        self.stats.incr("populates_dispatched" if ok else "populates_refused")
        return bool(ok)

    def run_due(self, now: float) -> int:
        n = 0
        while True:
            with self._cv:
                if not self._heap or self._heap[0][0] > now:
                    return n
                due, _, rer, msg, attempt = heapq.heappop(self._heap)
            self.deliver(rer, msg, max(now, due), attempt)
            n += 1

    def pending(self) -> int:
        with self._cv:
            return len(self._heap)

    def next_due(self) -> float | None:
        with self._cv:
            return self._heap[0][0] if self._heap else None

    def start(self) -> None:
        if self._thread is None:
            self._stop = False
            self._thread = threading.Thread(target=self._loop, daemon=True, name="populate-dispatch")
            self._thread.start()

    def stop(self) -> None:
        with self._cv:
            self._stop = True
            self._cv.notify()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def _loop(self) -> None:
        while True:
            with self._cv:
                if self._stop:
                    return
                wait = None
                if self._heap:
                    wait = max(0.0, (self._heap[0][0] - time.time() * 1000) / 1000)
                if wait is None or wait > 0:
                    self._cv.wait(wait)
                    continue
            self.run_due(time.time() * 1000)


@dataclass
class PendingChallenge:
    sender_ip: str
    rer: str
    domain: str
    rtype: int
    issued_at: int


@dataclass
class ServeInfo:
    kind: str  # answer, referral, nxdomain, nodata, refused, formerr
    challenged: bool = False
    populate_scheduled_at: float | None = None
    populate_withheld: bool = False


@dataclass
class AnsConfig:
    identity: str
    zone: Zone
    address4: str | None = None
    address6: str | None = None
    delay: DelayDistribution = field(default_factory=lambda: DelayDistribution.default_for(31))
    freshness_ms: int = FRESHNESS_MS


class AnsServer:
    def __init__(self, config: AnsConfig, signing_key: Ed25519PrivateKey | None = None,
                 sink: PopulateSink | None = None, rer_keys: dict[str, Ed25519PublicKey] | None = None,
                 rng: SecureRandom | None = None, max_retries: int = 3):
        self.config = config
        self.zone = config.zone
        self.signing_key = signing_key or Ed25519PrivateKey.generate()
        self.rer_keys = dict(rer_keys or {})
        self.rng = rng or default_random()
        self.ledger = PopulationLedger()
        self.stats = Stats()
        self.dispatcher = PopulateDispatcher(sink or _no_sink, config.identity, max_retries, stats=self.stats)
        self._pending: dict[str, PendingChallenge] = {}
        self._pending_lock = threading.Lock()

    @property
    def verification_key(self) -> Ed25519PublicKey:
        return self.signing_key.public_key()

    # -- DNS ---------------------------------------------------------------------------

    def serve_wire(self, wire: bytes, sender_ip: str, now: int | None = None) -> bytes:
        t0 = time.perf_counter()
        try:
            msg = dns.message.from_wire(wire)
        except Exception:
            self.stats.incr("formerr")
            return _formerr(wire)
        resp, _ = self.serve_query(msg, sender_ip, now)
        out = resp.to_wire()
        self.stats.observe("serve", (time.perf_counter() - t0) * 1000)
        return out

    def serve_query(self, msg: dns.message.Message, sender_ip: str,
                    now: int | None = None) -> tuple[dns.message.Message, ServeInfo]:
        now = now if now is not None else now_ms()
        self.stats.incr("queries")
        resp = dns.message.make_response(msg)
        if len(msg.question) != 1:
            resp.set_rcode(dns.rcode.FORMERR)
            return resp, ServeInfo("formerr")
        qname = msg.question[0].name.to_text(omit_final_dot=True)
        qname = "" if qname in ("", ".") else canonical_name(qname)
        qtype = msg.question[0].rdtype
        if not self.zone.serves(qname):
            self.stats.incr("refused")
            resp.set_rcode(dns.rcode.REFUSED)
            return resp, ServeInfo("refused")

        cut = self.zone.delegation(qname)
        if cut:
            self.stats.incr("referrals")
            _add_referral(resp, cut)
            return resp, ServeInfo("referral")

        resp.flags |= dns.flags.AA
        records = self.zone.lookup(qname, int(qtype))
        if not records:
            if self.zone.has_name(qname) or any(n.endswith("." + qname) for n in self.zone.names()):
                return resp, ServeInfo("nodata")
            resp.set_rcode(dns.rcode.NXDOMAIN)
            return resp, ServeInfo("nxdomain")
        rrset = dns.rrset.from_text_list(qname + ".", records[0].ttl, "IN", dns.rdatatype.to_text(qtype),
                                         [r.value for r in records])
        resp.answer.append(rrset)
        info = ServeInfo("answer")

        try:
            option = find_option(msg)
        except EdnsPrError:
            self.stats.incr("edns_pr_malformed")
            return resp, info
        if option is None or int(qtype) not in (A, AAAA):
            return resp, info
        self._populate_or_challenge(option, qname, int(qtype), records[0], sender_ip, now, resp, info)
        return resp, info

    def _populate_or_challenge(self, option, qname, rtype, record, sender_ip, now, resp, info) -> None:
        ttl_ms = record.ttl * 1000
        if self.ledger.claim(option.rer_address, qname, now, ttl_ms) == ALLOW:
            info.populate_scheduled_at = self.schedule_populate(option.rer_address, qname, rtype, now)
            attach(resp, EdnsPrOption(option.rer_address, False))
            return
        info.populate_withheld = True
        with self._pending_lock:
            pending = self._pending.get(sender_ip)
            if pending is not None and now > pending.issued_at + self.config.freshness_ms:
                pending = None
            if pending is None:
                self._pending[sender_ip] = PendingChallenge(sender_ip, option.rer_address, qname, rtype, now)
                info.challenged = True
        if info.challenged:
            self.stats.incr("challenges")
        attach(resp, EdnsPrOption(option.rer_address, info.challenged))

    # -- population ----------------------------------------------------------------------

    def populate_records(self, domain: str, rtype: int, now: int) -> list[PopulateRecord]:
        recs = self.zone.lookup(domain, rtype)
        ans_ip = self.config.address4 if rtype == A else self.config.address6
        if not recs or ans_ip is None:
            return []
        # one record per (domain, rtype): the slot keeps a single entry per pair anyway
        r = recs[0]
        return [PopulateRecord(canonical_name(domain), rtype, IN, now + r.ttl * 1000, r.value, ans_ip)]

    def schedule_populate(self, rer_address: str, domain: str, rtype: int, now: int,
                          dist: DelayDistribution | None = None) -> float | None:
        records = self.populate_records(domain, rtype, now)
        if not records:
            self.stats.incr("populates_skipped")
            return None
        msg = PopulateMessage(self.config.identity, tuple(records)).signed(self.signing_key).to_bytes()
        dist = dist or self.config.delay
        self.stats.incr("populates_scheduled")
        if dist.is_immediate:
            self.dispatcher.deliver(rer_address, msg, now)
            return float(now)
        due = now + dist.sample(self.rng)
        self.dispatcher.submit(due, rer_address, msg)
        return due

    # -- miss proofs ------------------------------------------------------------------------

    def pending_challenge(self, sender_ip: str) -> PendingChallenge | None:
        with self._pending_lock:
            return self._pending.get(sender_ip)

    def submit_proof(self, proof_bytes: bytes, sender_ip: str, now: int | None = None) -> ProofVerdict:
        now = now if now is not None else now_ms()
        t0 = time.perf_counter()
        verdict = self._check_proof(proof_bytes, sender_ip, now)
        self.stats.incr("proofs_accepted" if verdict.valid else "proofs_rejected")
        self.stats.observe("proof", (time.perf_counter() - t0) * 1000)
        return verdict

    def _check_proof(self, proof_bytes, sender_ip, now) -> ProofVerdict:
        try:
            proof = MissProof.from_bytes(proof_bytes)
        except ProofFormatError:
            return ProofVerdict(False, MALFORMED)
        pending = self.pending_challenge(sender_ip)
        if pending is None:
            return ProofVerdict(False, "no-challenge")
        key = self.rer_keys.get(pending.rer)
        if key is None:
            return ProofVerdict(False, "unknown-resolver")
        verdict = verify_miss_proof(proof, pending.domain, now, key, expected_ip=sender_ip,
                                    not_before_ms=pending.issued_at, freshness_ms=self.config.freshness_ms)
        if not verdict.valid:
            return verdict
        with self._pending_lock:
            if self._pending.get(sender_ip) is not pending:
                return ProofVerdict(False, "no-challenge")
            del self._pending[sender_ip]
        rtype = proof.rtype if proof.rtype in (A, AAAA) else pending.rtype
        record = self.zone.lookup(pending.domain, rtype)
        if record:
            self.ledger.record(pending.rer, pending.domain, now, record[0].ttl * 1000)
            self.schedule_populate(pending.rer, pending.domain, rtype, now)
        return verdict


def _no_sink(rer: str, msg: bytes, sender: str) -> bool:
    raise ConnectionError(f"no route to resolver {rer}")


def glue_name(cut: str) -> str:
    return f"ns.{cut}." if cut else "ns.root."


def _add_referral(resp: dns.message.Message, cut_records) -> None:
    cut = cut_records[0].name
    ttl = cut_records[0].ttl
    ns = dns.rrset.from_text(cut + ".", ttl, "IN", "NS", glue_name(cut))
    resp.authority.append(ns)
    for rec in cut_records:
        rdtype = "AAAA" if ":" in rec.value else "A"
        resp.additional.append(dns.rrset.from_text(glue_name(cut), rec.ttl, "IN", rdtype, rec.value))


def _formerr(wire: bytes) -> bytes:
    qid = wire[:2] if len(wire) >= 2 else b"\0\0"
    # header only: id, QR set, FORMERR
    return qid + bytes([0x80, dns.rcode.FORMERR]) + bytes(8)
