"""Clocks and the link-delay shim used by the testbed.

Two notions of time are kept apart. The protocol clock gives the
timestamps components stamp on records and transcripts; in virtual mode
it only moves when the harness says so. Latency is measured with a
per-thread timer: wall time plus any virtual delay the shim charged to
that thread, so injected link delays cost nothing in wall time.
"""

from __future__ import annotations

import threading
import time

from ..ans.delay import DelayDistribution
from ..randomness import SecureRandom, default_random

_account = threading.local()


def virtual_ms() -> float:
    return getattr(_account, "ms", 0.0)


def charge(ms: float) -> None:
    _account.ms = virtual_ms() + ms


def timer_ms() -> float:
    """Wall time plus the delay charged to the calling thread."""
    return time.perf_counter() * 1000 + virtual_ms()


class VirtualClock:
    def __init__(self, start_ms: int = 1_700_000_000_000):
        self._now = int(start_ms)
        self._lock = threading.Lock()

    def __call__(self) -> int:
        return self._now

    def set(self, now_ms: int) -> None:
        with self._lock:
            self._now = max(self._now, int(now_ms))

    def advance(self, ms: int) -> None:
        with self._lock:
            self._now += int(ms)


class WallClock:
    def __call__(self) -> int:
        return int(time.time() * 1000)


class LinkShim:
    """Charges a sampled round-trip delay to every call made through ``target``.

    ``mode`` is ``virtual`` (charge the thread account) or ``sleep`` (block).
    ``link_of`` maps the first call argument (an address) to a link name;
    without it every call uses ``default_link``. ``answer_override_ms``
    replaces the measured duration of resolver ``query`` calls.
    """

    def __init__(self, target, links: dict[str, DelayDistribution], mode: str = "virtual",
                 link_of=None, default_link: str = "", answer_override_ms: float | None = None,
                 rng: SecureRandom | None = None):
        if mode not in ("virtual", "sleep"):
            raise ValueError("latency mode must be 'virtual' or 'sleep'")
        self._target = target
        self._links = links
        self._mode = mode
        self._link_of = link_of
        self._default = default_link
        self._override = answer_override_ms
        self._rng = rng or default_random()
        self.injected_ms = 0.0
        self.calls: list[str] = []

    def __getattr__(self, name):
        attr = getattr(self._target, name)
        if name not in ("dns", "proof", "query", "register"):
            return attr

        def call(*args, **kwargs):
            link = self._link_of(args[0]) if self._link_of else self._default
            dist = self._links.get(link)
            delay = dist.sample(self._rng) if dist is not None else 0.0
            self.calls.append(link)
            self._wait(delay)
            t0 = time.perf_counter()
            out = attr(*args, **kwargs)
            if name == "query" and self._override is not None:
                took = (time.perf_counter() - t0) * 1000
                if self._mode == "virtual":
                    charge(self._override - took)
                else:
                    time.sleep(max(0.0, self._override - took) / 1000)
            return out

        return call

    def _wait(self, delay: float) -> None:
        if delay <= 0:
            return
        self.injected_ms += delay
        if self._mode == "virtual":
            charge(delay)
        else:
            time.sleep(delay / 1000)
