"""Blind query path of the resolver.

This module must only ever see opaque PIR ciphertexts. It depends on the
PIR engine and the transcript signer, never on the record codec; an
architecture test audits its imports.
"""

from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass

from ..pir import wire
from ..pir.scheme import EncodedCache, OpCounter, PirError, PublicKey, answer
from .signing import TranscriptSignature, TranscriptSigner
from .stats import Stats


class UnknownClientError(LookupError):
    pass


class MalformedQueryError(ValueError):
    pass


class OverloadedError(RuntimeError):
    def __init__(self, retry_after_ms: int):
        super().__init__(f"resolver overloaded, retry after {retry_after_ms} ms")
        self.retry_after_ms = retry_after_ms


@dataclass(frozen=True)
class Snapshot:
    version: int
    encoded: EncodedCache


@dataclass(frozen=True)
class ClientRegistration:
    client_id: bytes
    pk: PublicKey
    registered_at: int


class QueryHandler:
    """Answers PIR queries against whatever snapshot is current when they arrive."""

    def __init__(self, signer: TranscriptSigner, snapshot: Snapshot, stats: Stats,
                 workers: int = 4, queue_limit: int = 64, retry_after_ms: int = 200):
        self.signer = signer
        self._snapshot = snapshot
        self.stats = stats
        self.counter = OpCounter()
        self.registrations: dict[bytes, ClientRegistration] = {}
        self._workers = threading.BoundedSemaphore(workers)
        self._admit = threading.Lock()
        self._pending = 0
        self.queue_limit = queue_limit
        self.retry_after_ms = retry_after_ms

    @property
    def snapshot(self) -> Snapshot:
        return self._snapshot

    def publish(self, snapshot: Snapshot) -> None:
        # single reference assignment: readers see the old or the new snapshot, never a mix
        self._snapshot = snapshot

    def handle_query(self, client_id: bytes, q_bytes: bytes, client_ip: str,
                     now_ms: int) -> tuple[bytes, TranscriptSignature]:
        t_start = time.perf_counter()
        reg = self.registrations.get(client_id)
        if reg is None:
            self.stats.incr("queries_rejected")
            raise UnknownClientError("client is not registered")
        try:
            q = wire.load_query(q_bytes)
        except PirError as exc:
            self.stats.incr("queries_rejected")
            raise MalformedQueryError(str(exc)) from exc
        with self._admit:
            if self._pending >= self.queue_limit:
                self.stats.incr("queries_overloaded")
                raise OverloadedError(self.retry_after_ms)
            self._pending += 1
        try:
            with self._workers:
                snap = self._snapshot
                t0 = time.perf_counter()
                try:
                    r = answer(reg.pk, snap.encoded, q, self.counter)
                except PirError as exc:
                    self.stats.incr("queries_rejected")
                    raise MalformedQueryError(str(exc)) from exc
                self.stats.observe("answer", (time.perf_counter() - t0) * 1000)
        finally:
            with self._admit:
                self._pending -= 1
        r_bytes = wire.dump_response(r)
        sig = self.signer.sign(client_ip, now_ms, q_bytes, r_bytes)
        self.stats.incr("queries_served")
        self.stats.observe("query", (time.perf_counter() - t_start) * 1000)
        return r_bytes, sig


def client_id_for(pk_bytes: bytes) -> bytes:
    return hashlib.sha256(b"pirdns-client\x00" + pk_bytes).digest()[:16]
