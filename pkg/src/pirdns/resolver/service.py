"""The blind recursive resolver: registration, PIR answers and cache population."""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass

from ..cache.record import RecordError, encode_record
from ..cache.slot import Slot
from ..cache.store import CacheConfig, PlainCache
from ..pir import wire
from ..pir.params import LweParams, ensure_serviceable
from ..pir.scheme import PirError, new_encoded_cache, setup_server
from .answering import ClientRegistration, QueryHandler, Snapshot, client_id_for
from .populate import PopulateFormatError, PopulateMessage
from .signing import TranscriptSigner, public_bytes
from .stats import Stats
from .trust import TrustRegistry

log = logging.getLogger(__name__)


class RegistrationError(ValueError):
    def __init__(self, message: str, advertisement: dict):
        super().__init__(message)
        self.advertisement = advertisement


@dataclass(frozen=True)
class PopulateResult:
    accepted: bool
    reason: str = ""
    slots: tuple = ()


def now_ms() -> int:
    return int(time.time() * 1000)


class ResolverService:
    def __init__(self, config: CacheConfig, params: LweParams | None = None,
                 trust: TrustRegistry | None = None, signer: TranscriptSigner | None = None,
                 workers: int = 4, queue_limit: int = 64, plain: PlainCache | None = None):
        params = params or LweParams.for_cache(config.n_slots, config.slot_bytes)
        if params.n_slots != config.n_slots or params.slot_bytes != config.slot_bytes:
            raise ValueError("LWE parameters do not match the cache shape")
        ensure_serviceable(params)
        self.config = config
        self.params = params
        self.trust = trust or TrustRegistry()
        self.signer = signer or TranscriptSigner()
        self._stats = Stats()
        self._plain = plain.copy() if plain else PlainCache(config)
        encoded = new_encoded_cache(params)
        for j in self._plain.occupied():
            setup_server(encoded, j, self._plain.slot_bytes(j))
        self.handler = QueryHandler(self.signer, Snapshot(0, encoded), self._stats, workers, queue_limit)
        self._writer = threading.Lock()

    # -- configuration ---------------------------------------------------------

    def advertisement(self) -> dict:
        return {
            "lwe_params": self.params.to_dict(),
            "params_digest": self.params.digest.hex(),
            "cache": {"n_slots": self.config.n_slots, "slot_bytes": self.config.slot_bytes},
            "verification_key": public_bytes(self.signer.public_key).hex(),
            "key_id": self.signer.key_id.hex(),
        }

    # -- clients -----------------------------------------------------------------

    def register(self, pk_bytes: bytes, now: int | None = None) -> bytes:
        try:
            pk = wire.load_public_key(pk_bytes)
        except PirError as exc:
            raise RegistrationError(f"malformed public key: {exc}", self.advertisement()) from exc
        if pk.params_digest != self.params.digest:
            self._stats.incr("registrations_rejected")
            raise RegistrationError("public key built for different parameters", self.advertisement())
        cid = client_id_for(pk_bytes)
        if cid not in self.handler.registrations:
            self.handler.registrations[cid] = ClientRegistration(cid, pk, now if now is not None else now_ms())
            self._stats.incr("registrations")
        return cid

    def handle_query(self, client_id: bytes, q_bytes: bytes, client_ip: str, now: int | None = None):
        return self.handler.handle_query(client_id, q_bytes, client_ip, now if now is not None else now_ms())

    # -- population ------------------------------------------------------------------

    def apply_populate(self, msg_bytes: bytes, sender: str, now: int | None = None) -> PopulateResult:
        now = now if now is not None else now_ms()
        result = self._check_and_apply(msg_bytes, sender, now)
        self._stats.incr("populates_accepted" if result.accepted else "populates_rejected")
        if not result.accepted:
            log.info("rejected populate from %s: %s", sender, result.reason)
        return result

    def _check_and_apply(self, msg_bytes: bytes, sender: str, now: int) -> PopulateResult:
        try:
            msg = PopulateMessage.from_bytes(msg_bytes)
        except PopulateFormatError:
            return PopulateResult(False, "malformed")
        entry = self.trust.by_identity(sender)
        if entry is None or msg.sender != sender:
            return PopulateResult(False, "unknown-sender")
        if not msg.verify(entry.verification_key):
            return PopulateResult(False, "bad-signature")
        wires = []
        for rec in msg.records:
            match = self.trust.lookup(rec.domain)
            if match is None or match[1].identity != sender:
                return PopulateResult(False, "zone-mismatch")
            if rec.expire_ts <= now:
                return PopulateResult(False, "stale")
            try:
                wires.append((rec.domain, encode_record(rec.domain, rec.rtype, rec.rclass, rec.expire_ts,
                                                        rec.answer_ip, rec.ans_ip)))
            except (RecordError, ValueError):
                return PopulateResult(False, "malformed")
        with self._writer:
            plain = self._plain.copy()
            touched = set()
            try:
                for domain, w in wires:
                    touched.add(plain.insert(domain, w))
            except RecordError:
                return PopulateResult(False, "malformed")
            current = self.handler.snapshot
            encoded = current.encoded.copy()
            for j in sorted(touched):
                setup_server(encoded, j, plain.slot_bytes(j))
            self._plain = plain
            self.handler.publish(Snapshot(current.version + 1, encoded))
            self._stats.set_max("snapshot_version", current.version + 1)
        return PopulateResult(True, "", tuple(sorted(touched)))

    # -- operations ---------------------------------------------------------------------

    def restart(self) -> None:
        """Simulate a reboot: the cache is lost, registrations survive."""
        with self._writer:
            self._plain = PlainCache(self.config)
            current = self.handler.snapshot
            self.handler.publish(Snapshot(current.version + 1, new_encoded_cache(self.params)))
        self._stats.incr("restarts")

    def drop(self, domain: str) -> None:
        """Remove every record stored in the slot of ``domain`` (misbehaviour injection for tests)."""
        with self._writer:
            plain = self._plain.copy()
            j = plain.slot_for(domain)
            plain.set_slot(j, Slot(self.config.slot_bytes))
            encoded = self.handler.snapshot.encoded.copy()
            setup_server(encoded, j, plain.slot_bytes(j))
            self._plain = plain
            self.handler.publish(Snapshot(self.handler.snapshot.version + 1, encoded))

    @property
    def plain_cache(self) -> PlainCache:
        return self._plain

    def stats(self) -> dict:
        snap = self._stats.snapshot()
        snap["snapshot_version"] = self.handler.snapshot.version
        snap["answer_mul_acc"] = self.handler.counter.mul_acc
        return snap
