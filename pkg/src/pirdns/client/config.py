"""Client configuration file (JSON).

    {
      "resolver_url": "http://127.0.0.1:8053",
      "rer_address": "10.0.0.1",
      "root_hints": ["10.0.0.2"],
      "ans_urls": {"10.0.0.2": "http://127.0.0.1:8054", ...},
      "client_ip": "10.9.0.1",
      "backup_pool": 2,
      "listen": "127.0.0.1:5353",
      "log_file": null
    }

``client_ip`` is sent as X-Forwarded-For to name servers started with
``--trust-forwarded`` so a loopback testbed can tell clients apart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class ClientConfig:
    resolver_url: str
    rer_address: str
    root_hints: list
    ans_urls: dict = field(default_factory=dict)
    client_ip: str | None = None
    backup_pool: int = 2
    listen: str = "127.0.0.1:5353"
    log_file: str | None = None

    @classmethod
    def load(cls, path: str | Path) -> "ClientConfig":
        data = json.loads(Path(path).read_text())
        return cls(**data)

    @property
    def listen_addr(self) -> tuple[str, int]:
        host, _, port = self.listen.rpartition(":")
        return host or "127.0.0.1", int(port)
