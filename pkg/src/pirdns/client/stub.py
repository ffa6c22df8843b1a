"""Local DNS listener: answers ordinary A/AAAA questions through the proxy."""

from __future__ import annotations

import logging
import socketserver
import struct
import threading

import dns.exception
import dns.flags
import dns.message
import dns.rcode
import dns.rdatatype
import dns.rrset

from ..cache.record import A, AAAA
from .proxy import ClientProxy

log = logging.getLogger(__name__)


def answer_question(proxy: ClientProxy, wire: bytes) -> bytes:
    try:
        msg = dns.message.from_wire(wire)
    except dns.exception.DNSException:
        qid = wire[:2] if len(wire) >= 2 else b"\0\0"
        return qid + bytes([0x80, dns.rcode.FORMERR]) + bytes(8)
    resp = dns.message.make_response(msg)
    resp.flags |= dns.flags.RA
    if len(msg.question) != 1:
        resp.set_rcode(dns.rcode.FORMERR)
        return resp.to_wire()
    q = msg.question[0]
    if q.rdtype not in (A, AAAA):
        resp.set_rcode(dns.rcode.NOTIMP)
        return resp.to_wire()
    name = q.name.to_text(omit_final_dot=True)
    try:
        out = proxy.resolve(name, int(q.rdtype))
    except Exception as exc:
        log.warning("resolution of %s failed: %s", name, exc)
        resp.set_rcode(dns.rcode.SERVFAIL)
        return resp.to_wire()
    if out.answer is None:
        resp.set_rcode(dns.rcode.NXDOMAIN if out.rcode == "NXDOMAIN" else dns.rcode.NOERROR)
        return resp.to_wire()
    resp.answer.append(dns.rrset.from_text(q.name, max(out.ttl_s, 0), "IN",
                                           dns.rdatatype.to_text(q.rdtype), out.answer))
    return resp.to_wire()


class StubListener:
    """UDP and TCP listeners on the same port, each request served on its own thread."""

    def __init__(self, proxy: ClientProxy, host: str = "127.0.0.1", port: int = 5353):
        self.proxy = proxy

        class Udp(socketserver.BaseRequestHandler):
            def handle(self):
                data, sock = self.request
                sock.sendto(answer_question(proxy, data), self.client_address)

        class Tcp(socketserver.StreamRequestHandler):
            def handle(self):
                while True:
                    head = self.rfile.read(2)
                    if len(head) < 2:
                        return
                    (n,) = struct.unpack("!H", head)
                    out = answer_question(proxy, self.rfile.read(n))
                    self.wfile.write(struct.pack("!H", len(out)) + out)

        self.udp = socketserver.ThreadingUDPServer((host, port), Udp)
        self.udp.daemon_threads = True
        self.tcp = socketserver.ThreadingTCPServer((host, self.udp.server_address[1]), Tcp)
        self.tcp.daemon_threads = True
        self._threads: list[threading.Thread] = []

    @property
    def address(self) -> tuple[str, int]:
        return self.udp.server_address

    def start(self) -> "StubListener":
        for srv in (self.udp, self.tcp):
            t = threading.Thread(target=srv.serve_forever, daemon=True)
            t.start()
            self._threads.append(t)
        return self

    def stop(self) -> None:
        for srv in (self.udp, self.tcp):
            srv.shutdown()
            srv.server_close()
