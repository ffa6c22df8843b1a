"""How the proxy reaches the resolver and the name servers.

In-process transports call the services directly (tests, the harness);
HTTP transports talk to the real endpoints. Every resolver transport keeps
the raw bytes it sent so tests can scan them for plaintext names.
"""

from __future__ import annotations

import json
import threading
from typing import Callable

from ..httpio import HttpError, request
from ..resolver.http import unpack_query_reply
from ..resolver.signing import TranscriptSignature

Clock = Callable[[], int]


class TransportError(RuntimeError):
    pass


def wall_clock() -> int:
    import time
    return int(time.time() * 1000)


class _SentLog:
    def __init__(self, keep: bool):
        self.keep = keep
        self.sent: list[bytes] = []
        self._lock = threading.Lock()

    def log(self, data: bytes) -> None:
        if self.keep:
            with self._lock:
                self.sent.append(bytes(data))


class InProcessResolver(_SentLog):
    def __init__(self, service, client_ip: str = "127.0.0.1", clock: Clock = wall_clock, keep_sent: bool = True):
        super().__init__(keep_sent)
        self.service = service
        self.client_ip = client_ip
        self.clock = clock

    def config(self) -> dict:
        return self.service.advertisement()

    def register(self, pk_bytes: bytes) -> bytes:
        self.log(pk_bytes)
        return self.service.register(pk_bytes, self.clock())

    def query(self, client_id: bytes, q_bytes: bytes) -> tuple[bytes, TranscriptSignature]:
        self.log(client_id)
        self.log(q_bytes)
        try:
            return self.service.handle_query(client_id, q_bytes, self.client_ip, self.clock())
        except Exception as exc:
            raise TransportError(f"resolver query failed: {exc}") from exc


class HttpResolver(_SentLog):
    def __init__(self, base_url: str, keep_sent: bool = True, timeout: float = 60.0):
        super().__init__(keep_sent)
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def config(self) -> dict:
        return json.loads(request(self.base_url + "/v1/config", timeout=self.timeout)[0])

    def register(self, pk_bytes: bytes) -> bytes:
        self.log(pk_bytes)
        try:
            return request(self.base_url + "/v1/register", pk_bytes, timeout=self.timeout)[0]
        except HttpError as exc:
            raise TransportError(f"registration rejected: {exc.body[:200]!r}") from exc

    def query(self, client_id: bytes, q_bytes: bytes) -> tuple[bytes, TranscriptSignature]:
        headers = {"X-Client-Id": client_id.hex()}
        self.log(json.dumps(headers).encode())
        self.log(q_bytes)
        try:
            body, _ = request(self.base_url + "/v1/query", q_bytes, headers, timeout=self.timeout)
        except (HttpError, OSError) as exc:
            raise TransportError(f"resolver query failed: {exc}") from exc
        return unpack_query_reply(body)


class InProcessAns:
    """Routes by server address to in-process AnsServer objects and logs every contact."""

    def __init__(self, servers: dict, client_ip: str = "127.0.0.1", clock: Clock = wall_clock):
        self.servers = dict(servers)
        self.client_ip = client_ip
        self.clock = clock
        self.contacts: list[tuple[str, str]] = []  # (address, kind)

    def dns(self, address: str, wire: bytes) -> bytes:
        server = self.servers.get(address)
        if server is None:
            raise TransportError(f"no name server at {address}")
        self.contacts.append((address, "dns"))
        return server.serve_wire(wire, self.client_ip, self.clock())

    def proof(self, address: str, proof_bytes: bytes) -> tuple[bool, str]:
        server = self.servers.get(address)
        if server is None:
            raise TransportError(f"no name server at {address}")
        self.contacts.append((address, "proof"))
        v = server.submit_proof(proof_bytes, self.client_ip, self.clock())
        return v.valid, v.reason


class HttpAns:
    """Maps name-server addresses to DoH base URLs."""

    def __init__(self, urls: dict[str, str], client_ip: str | None = None, timeout: float = 30.0):
        self.urls = {k: v.rstrip("/") for k, v in urls.items()}
        self.client_ip = client_ip
        self.timeout = timeout
        self.contacts: list[tuple[str, str]] = []

    def _headers(self) -> dict:
        return {"X-Forwarded-For": self.client_ip} if self.client_ip else {}

    def dns(self, address: str, wire: bytes) -> bytes:
        url = self.urls.get(address)
        if url is None:
            raise TransportError(f"no name server at {address}")
        self.contacts.append((address, "dns"))
        try:
            return request(url + "/dns-query", wire, self._headers(), "application/dns-message",
                           timeout=self.timeout)[0]
        except (HttpError, OSError) as exc:
            raise TransportError(f"name server {address} failed: {exc}") from exc

    def proof(self, address: str, proof_bytes: bytes) -> tuple[bool, str]:
        url = self.urls.get(address)
        if url is None:
            raise TransportError(f"no name server at {address}")
        self.contacts.append((address, "proof"))
        try:
            body, _ = request(url + "/v1/proof", proof_bytes, self._headers(), timeout=self.timeout)
        except HttpError as exc:
            body = exc.body
        except OSError as exc:
            raise TransportError(f"name server {address} failed: {exc}") from exc
        v = json.loads(body)
        return bool(v["valid"]), v["reason"]
