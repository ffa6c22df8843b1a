"""HTTP front end of the resolver.

    POST /v1/register   body: public key blob        -> 16-byte client id
    POST /v1/query      X-Client-Id: hex, body: query -> u32 sig length | signature | response
    POST /v1/populate   X-Ans-Identity: id, body: populate message -> JSON {accepted, reason}
    GET  /v1/config     -> JSON advertisement (LWE params, cache shape, verification key)
    GET  /v1/stats      -> JSON counters
"""

from __future__ import annotations

import struct

from ..httpio import OCTET, json_reply, make_server
from .answering import MalformedQueryError, OverloadedError, UnknownClientError
from .service import RegistrationError, ResolverService
from .signing import TranscriptSignature


def pack_query_reply(r_bytes: bytes, sig: TranscriptSignature) -> bytes:
    s = sig.to_bytes()
    return struct.pack("<I", len(s)) + s + r_bytes


def unpack_query_reply(body: bytes) -> tuple[bytes, TranscriptSignature]:
    (n,) = struct.unpack_from("<I", body)
    return body[4 + n:], TranscriptSignature.from_bytes(body[4:4 + n])


def build_routes(service: ResolverService) -> dict:
    def register(body, headers, ip):
        try:
            cid = service.register(body)
        except RegistrationError as exc:
            return json_reply(409, {"error": str(exc), "advertisement": exc.advertisement})
        return 200, OCTET, cid, {}

    def query(body, headers, ip):
        try:
            cid = bytes.fromhex(headers.get("x-client-id", ""))
            r, sig = service.handle_query(cid, body, ip)
        except (UnknownClientError, ValueError) as exc:
            if isinstance(exc, MalformedQueryError):
                return 400, "text/plain", str(exc).encode(), {}
            return 403, "text/plain", str(exc).encode(), {}
        except OverloadedError as exc:
            return 503, "text/plain", b"overloaded", {"Retry-After-Ms": str(exc.retry_after_ms)}
        return 200, OCTET, pack_query_reply(r, sig), {}

    def populate(body, headers, ip):
        res = service.apply_populate(body, headers.get("x-ans-identity", ""))
        return json_reply(200 if res.accepted else 403, {"accepted": res.accepted, "reason": res.reason})

    return {
        ("POST", "/v1/register"): register,
        ("POST", "/v1/query"): query,
        ("POST", "/v1/populate"): populate,
        ("GET", "/v1/config"): lambda b, h, ip: json_reply(200, service.advertisement()),
        ("GET", "/v1/stats"): lambda b, h, ip: json_reply(200, service.stats()),
    }


def make_resolver_server(service: ResolverService, host: str = "127.0.0.1", port: int = 0,
                         certfile: str | None = None, keyfile: str | None = None):
    return make_server(host, port, build_routes(service), certfile, keyfile)
