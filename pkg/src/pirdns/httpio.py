"""Tiny HTTP plumbing shared by the resolver and ANS endpoints."""

from __future__ import annotations

import json
import ssl
import threading
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

OCTET = "application/octet-stream"

# (method, path) -> fn(body, headers, client_ip) -> (status, content_type, body, extra_headers)
Route = Callable[[bytes, dict, str], tuple]


class HttpError(RuntimeError):
    def __init__(self, status: int, body: bytes, headers: dict):
        super().__init__(f"HTTP {status}: {body[:200]!r}")
        self.status = status
        self.body = body
        self.headers = headers


def make_server(host: str, port: int, routes: dict[tuple[str, str], Route],
                certfile: str | None = None, keyfile: str | None = None) -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _dispatch(self, method):
            route = routes.get((method, self.path.split("?")[0]))
            if route is None:
                self._reply(404, "text/plain", b"not found", {})
                return
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            headers = {k.lower(): v for k, v in self.headers.items()}
            try:
                status, ctype, out, extra = route(body, headers, self.client_address[0])
            except Exception as exc:  # keep the server alive on handler bugs
                status, ctype, out, extra = 500, "text/plain", str(exc).encode(), {}
            self._reply(status, ctype, out, extra)

        def _reply(self, status, ctype, body, extra):
            self.send_response(status)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            for k, v in extra.items():
                self.send_header(k, v)
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

        def log_message(self, fmt, *args):
            pass

    server = ThreadingHTTPServer((host, port), Handler)
    server.daemon_threads = True
    if certfile:
        ctx = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
        ctx.load_cert_chain(certfile, keyfile)
        server.socket = ctx.wrap_socket(server.socket, server_side=True)
    return server


def serve_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    t = threading.Thread(target=server.serve_forever, daemon=True)
    t.start()
    return t


def json_reply(status: int, obj) -> tuple:
    return status, "application/json", json.dumps(obj).encode(), {}


def request(url: str, body: bytes | None = None, headers: dict | None = None,
            content_type: str = OCTET, timeout: float = 30.0) -> tuple[bytes, dict]:
    req = urllib.request.Request(url, data=body, method="POST" if body is not None else "GET")
    if body is not None:
        req.add_header("Content-Type", content_type)
    for k, v in (headers or {}).items():
        req.add_header(k, v)
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.read(), dict(resp.headers.items())
    except urllib.error.HTTPError as exc:
        raise HttpError(exc.code, exc.read(), dict(exc.headers.items())) from None
