"""Network front ends of the mock ANS.

    POST /dns-query   application/dns-message in and out (DoH framing)
    POST /v1/proof    binary MissProof -> JSON {valid, reason}
    GET  /v1/stats    JSON counters

A plain UDP listener serves the legacy path (no population is possible
there unless the query itself carries EDNS-PR).
"""

from __future__ import annotations

import socketserver

from ..httpio import json_reply, make_server
from .server import AnsServer

DNS_MESSAGE = "application/dns-message"


def build_routes(ans: AnsServer, trust_forwarded: bool = False) -> dict:
    def sender(headers, ip):
        # the testbed runs every party on loopback and names them explicitly
        if trust_forwarded and headers.get("x-forwarded-for"):
            return headers["x-forwarded-for"].split(",")[0].strip()
        return ip

    def doh(body, headers, ip):
        if headers.get("content-type", DNS_MESSAGE) != DNS_MESSAGE:
            return 415, "text/plain", b"expected application/dns-message", {}
        return 200, DNS_MESSAGE, ans.serve_wire(body, sender(headers, ip)), {}

    def proof(body, headers, ip):
        v = ans.submit_proof(body, sender(headers, ip))
        return json_reply(200 if v.valid else 403, {"valid": v.valid, "reason": v.reason})

    return {
        ("POST", "/dns-query"): doh,
        ("POST", "/v1/proof"): proof,
        ("GET", "/v1/stats"): lambda b, h, ip: json_reply(200, ans.stats.snapshot()),
    }


def make_ans_server(ans: AnsServer, host: str = "127.0.0.1", port: int = 0, trust_forwarded: bool = False,
                    certfile: str | None = None, keyfile: str | None = None):
    return make_server(host, port, build_routes(ans, trust_forwarded), certfile, keyfile)


def make_udp_server(ans: AnsServer, host: str = "127.0.0.1", port: int = 0) -> socketserver.ThreadingUDPServer:
    class Handler(socketserver.BaseRequestHandler):
        def handle(self):
            data, sock = self.request
            sock.sendto(ans.serve_wire(data, self.client_address[0]), self.client_address)

    server = socketserver.ThreadingUDPServer((host, port), Handler)
    server.daemon_threads = True
    return server
