"""User side of private resolution: PIR lookup first, name servers only on a miss."""

from __future__ import annotations

import json
import logging
import threading
import time
from collections import deque
from dataclasses import dataclass, field

import dns.exception
import dns.flags
import dns.message
import dns.rcode
import dns.rdatatype

from ..ans.edns import EdnsPrError, EdnsPrOption, attach, find_option
from ..ans.proof import MissProof
from ..cache.record import A, AAAA, NS, canonical_name, name_digest
from ..cache.slot import Slot
from ..pir import wire
from ..pir.params import LweParams
from ..pir.scheme import QueryKey, extract, index, query, setup_user
from ..randomness import SecureRandom, default_random
from ..resolver.signing import TranscriptSignature, load_public
from .transport import TransportError, wall_clock

log = logging.getLogger("pirdns.client")

PIR_HIT = "pir_hit"
SHORTCUT_ANS = "shortcut_ans"
FULL_ITERATIVE = "full_iterative"
MAX_HOPS = 16


class ResolutionError(RuntimeError):
    pass


@dataclass
class KeyPair:
    qk: QueryKey
    pk_bytes: bytes
    client_id: bytes


@dataclass(frozen=True)
class Transcript:
    q: bytes
    r: bytes
    sig: TranscriptSignature
    timestamp_ms: int
    domain: str
    rtype: int


@dataclass
class ChallengeResult:
    accepted: bool
    reason: str
    backup_key_id: bytes = b""


@dataclass
class ResolutionOutcome:
    domain: str
    rtype: int
    source: str
    answer: str | None
    latency_ms: float
    cache_status: str  # hit, expired or absent, as seen in the PIR slot
    transcript: Transcript | None = None
    ttl_s: int = 0
    rcode: str = "NOERROR"
    hops: list = field(default_factory=list)
    challenge: ChallengeResult | None = None
    local_ms: float = 0.0  # client-side PIR work (query build, signature check, extract)

    def log_fields(self) -> dict:
        return {
            "domain": self.domain, "rtype": self.rtype, "source": self.source, "answer": self.answer,
            "latency_ms": round(self.latency_ms, 3), "cache_status": self.cache_status, "rcode": self.rcode,
            "hops": self.hops, "ttl_s": self.ttl_s, "local_ms": round(self.local_ms, 3),
            "challenge": None if self.challenge is None else {
                "accepted": self.challenge.accepted, "reason": self.challenge.reason},
        }


def perf_ms() -> float:
    return time.perf_counter() * 1000


class ClientProxy:
    def __init__(self, resolver, ans, root_hints: list[str], rer_address: str, backup_pool: int = 2,
                 rng: SecureRandom | None = None, clock=wall_clock, timer=perf_ms, ring_size: int = 64,
                 json_log: bool = True):
        if backup_pool < 1:
            raise ValueError("need at least one backup key pair")
        self.resolver = resolver
        self.ans = ans
        self.root_hints = list(root_hints)
        self.rer_address = rer_address
        self.backup_pool = backup_pool
        self.rng = rng or default_random()
        self.clock = clock
        self.timer = timer
        self.transcripts: deque[Transcript] = deque(maxlen=ring_size)
        self.json_log = json_log
        self._key_lock = threading.Lock()
        self._ring_lock = threading.Lock()
        self.params: LweParams | None = None
        self.verification_key = None
        self.primary: KeyPair | None = None
        self.backups: list[KeyPair] = []

    # -- setup ---------------------------------------------------------------------------

    def setup(self) -> "ClientProxy":
        adv = self.resolver.config()
        self.params = LweParams.from_dict(adv["lwe_params"])
        self.verification_key = load_public(bytes.fromhex(adv["verification_key"]))
        self.primary = self._new_pair()
        self.backups = [self._new_pair() for _ in range(self.backup_pool)]
        return self

    def _new_pair(self) -> KeyPair:
        qk, pk = setup_user(self.params.n_slots, self.params, self.rng)
        blob = wire.dump_public_key(pk)
        return KeyPair(qk, blob, self.resolver.register(blob))

    # -- PIR -----------------------------------------------------------------------------

    def _pir_fetch(self, pair: KeyPair, domain: str, rtype: int,
                   out: ResolutionOutcome | None = None) -> tuple[Slot, Transcript]:
        t0 = perf_ms()
        idx = index(domain, self.params.n_slots)
        q_bytes = wire.dump_query(query(pair.qk, idx, self.rng))
        t1 = perf_ms()
        r_bytes, sig = self.resolver.query(pair.client_id, q_bytes)
        t2 = perf_ms()
        if not sig.verify(self.verification_key) or not sig.binds(sig.client_ip, sig.timestamp_ms, q_bytes, r_bytes):
            raise ResolutionError("resolver transcript signature does not verify")
        slot = Slot.from_bytes(extract(pair.qk, wire.load_response(r_bytes)))
        if out is not None:
            out.local_ms += (t1 - t0) + (perf_ms() - t2)
        t = Transcript(q_bytes, r_bytes, sig, sig.timestamp_ms, domain, rtype)
        if pair is self.primary:
            with self._ring_lock:
                self.transcripts.append(t)
        return slot, t

    # -- resolution ------------------------------------------------------------------------

    def resolve(self, domain: str, rtype: int = A, now: int | None = None) -> ResolutionOutcome:
        if rtype not in (A, AAAA):
            raise ValueError("only A and AAAA are resolved")
        t0 = self.timer()
        domain = canonical_name(domain)
        out = ResolutionOutcome(domain, rtype, PIR_HIT, None, 0.0, "absent")
        slot, out.transcript = self._pir_fetch(self.primary, domain, rtype, out)
        now = now if now is not None else self.clock()
        look = slot.find(name_digest(domain), rtype, now)
        out.cache_status = look.status
        if look.hit:
            out.answer = look.record.answer_ip
            out.ttl_s = max(0, (look.record.expire_ts - now) // 1000)
        else:
            resp, server = None, None
            if look.status == "expired":
                server = look.record.ans_ip
                resp = self._try_final(server, domain, rtype, out)
                if resp is not None:
                    out.source = SHORTCUT_ANS
            if resp is None:
                out.source = FULL_ITERATIVE
                resp, server = self._iterate(domain, rtype, out)
            self._read_answer(resp, out)
            self._maybe_prove(resp, server, domain, rtype, out)
        out.latency_ms = self.timer() - t0
        if self.json_log:
            log.info(json.dumps(out.log_fields()))
        return out

    def _final_query(self, domain: str, rtype: int) -> bytes:
        msg = dns.message.make_query(domain + ".", dns.rdatatype.RdataType(rtype))
        msg.flags &= ~dns.flags.RD
        attach(msg, EdnsPrOption(self.rer_address))
        return msg.to_wire()

    def _try_final(self, server: str, domain: str, rtype: int, out: ResolutionOutcome):
        try:
            out.hops.append(server)
            resp = dns.message.from_wire(self.ans.dns(server, self._final_query(domain, rtype)))
        except (TransportError, dns.exception.DNSException) as exc:
            log.debug("shortcut to %s failed: %s", server, exc)
            return None
        if resp.rcode() != dns.rcode.NOERROR or not _answer_rrset(resp, domain, rtype):
            return None
        return resp

    def _iterate(self, domain: str, rtype: int, out: ResolutionOutcome):
        """Walk from the root, asking each server only for the next label (query minimization)."""
        labels = domain.split(".")
        server = self.root_hints[0]
        i = 1
        for _ in range(MAX_HOPS):
            name = ".".join(labels[-i:])
            out.hops.append(server)
            if name == domain:
                resp = dns.message.from_wire(self.ans.dns(server, self._final_query(domain, rtype)))
                nxt = _referral(resp)
                if nxt is None:
                    return resp, server
                server = nxt
                continue
            msg = dns.message.make_query(name + ".", "NS")
            msg.flags &= ~dns.flags.RD
            resp = dns.message.from_wire(self.ans.dns(server, msg.to_wire()))
            if resp.rcode() == dns.rcode.NXDOMAIN:
                return resp, server
            if resp.rcode() != dns.rcode.NOERROR:
                raise ResolutionError(f"{server} answered {dns.rcode.to_text(resp.rcode())} for {name}")
            nxt = _referral(resp)
            if nxt is not None:
                server = nxt
            i += 1
        raise ResolutionError(f"too many hops resolving {domain}")

    def _read_answer(self, resp: dns.message.Message, out: ResolutionOutcome) -> None:
        out.rcode = dns.rcode.to_text(resp.rcode())
        rrset = _answer_rrset(resp, out.domain, out.rtype)
        if rrset is not None:
            out.answer = next(iter(rrset)).address
            out.ttl_s = rrset.ttl

    def _maybe_prove(self, resp, server, domain, rtype, out: ResolutionOutcome) -> None:
        try:
            opt = find_option(resp)
        except EdnsPrError:
            return
        if opt is not None and opt.challenge:
            out.challenge = self.handle_challenge(domain, rtype, server)

    # -- challenges -------------------------------------------------------------------------

    def handle_challenge(self, domain: str, rtype: int, server: str) -> ChallengeResult:
        """Prove a miss with a fresh query under a backup key, then retire that key."""
        with self._key_lock:
            pair = self.backups.pop(0)
        try:
            slot, t = self._pir_fetch(pair, domain, rtype)
            proof = MissProof(t.q, t.r, pair.qk, t.sig, t.sig.client_ip, t.timestamp_ms, domain, rtype)
            accepted, reason = self.ans.proof(server, proof.to_bytes())
        finally:
            # the ANS has (or may have) seen this secret; it is never used again
            with self._key_lock:
                self.backups.append(self._new_pair())
        return ChallengeResult(accepted, reason, pair.client_id)

    def build_proof(self, pair: KeyPair, t: Transcript) -> MissProof:
        return MissProof(t.q, t.r, pair.qk, t.sig, t.sig.client_ip, t.timestamp_ms, t.domain, t.rtype)


def _answer_rrset(resp: dns.message.Message, domain: str, rtype: int):
    for rrset in resp.answer:
        if rrset.rdtype == rtype and rrset.name.to_text(omit_final_dot=True).lower() == domain:
            return rrset
    return None


def _referral(resp: dns.message.Message) -> str | None:
    if resp.answer or not any(rs.rdtype == NS for rs in resp.authority):
        return None
    glue = {}
    for rs in resp.additional:
        if rs.rdtype in (A, AAAA):
            glue.setdefault(rs.name, next(iter(rs)).address)
    for rs in resp.authority:
        if rs.rdtype == NS:
            for rd in rs:
                if rd.target in glue:
                    return glue[rd.target]
    return None
