"""Populate-delay distributions, sampled from the CSPRNG.

Delays are in milliseconds. ``uniform`` draws a real value in [lo, hi),
``geometric`` counts Bernoulli(p) trials (support 1, 2, ...) and ``fixed``
always returns the same value. ``pmf`` gives the probability that the
delay, rounded up to a whole millisecond, equals ``k``; this is the
discrete view the timing analysis works with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..randomness import SecureRandom, default_random

KINDS = ("uniform", "geometric", "fixed")


@dataclass(frozen=True)
class DelayDistribution:
    kind: str = "uniform"
    lo_ms: float = 0.0
    hi_ms: float = 62.0
    p: float = 1.0
    ms: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown delay kind {self.kind!r}")
        if self.kind == "uniform" and not 0 <= self.lo_ms < self.hi_ms:
            raise ValueError("uniform delay needs 0 <= lo < hi")
        if self.kind == "geometric" and not 0 < self.p <= 1:
            raise ValueError("geometric p must be in (0, 1]")
        if self.kind == "fixed" and self.ms < 0:
            raise ValueError("fixed delay must be nonnegative")

    @classmethod
    def uniform(cls, lo_ms: float, hi_ms: float) -> "DelayDistribution":
        return cls("uniform", lo_ms=lo_ms, hi_ms=hi_ms)

    @classmethod
    def geometric(cls, p: float) -> "DelayDistribution":
        return cls("geometric", p=p)

    @classmethod
    def fixed(cls, ms: float) -> "DelayDistribution":
        return cls("fixed", ms=ms)

    @classmethod
    def default_for(cls, delta_ms: float) -> "DelayDistribution":
        return cls.uniform(0, 2 * delta_ms)

    @classmethod
    def with_mean(cls, kind: str, mean_ms: float) -> "DelayDistribution":
        if kind == "uniform":
            return cls.uniform(0, 2 * mean_ms)
        if kind == "geometric":
            return cls.geometric(min(1.0, 1.0 / mean_ms))
        return cls.fixed(mean_ms)

    @classmethod
    def parse(cls, text: str) -> "DelayDistribution":
        """``uniform:LO:HI``, ``geometric:P`` or ``fixed:MS``."""
        kind, *args = text.split(":")
        vals = [float(a) for a in args]
        if kind == "uniform" and len(vals) == 2:
            return cls.uniform(*vals)
        if kind == "geometric" and len(vals) == 1:
            return cls.geometric(vals[0])
        if kind == "fixed" and len(vals) == 1:
            return cls.fixed(vals[0])
        raise ValueError(f"cannot parse delay distribution {text!r}")

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "lo_ms": self.lo_ms, "hi_ms": self.hi_ms}
        if self.kind == "geometric":
            return {"kind": "geometric", "p": self.p}
        return {"kind": "fixed", "ms": self.ms}

    @classmethod
    def from_dict(cls, d: dict) -> "DelayDistribution":
        return cls(**d)

    @property
    def mean(self) -> float:
        if self.kind == "uniform":
            return (self.lo_ms + self.hi_ms) / 2
        if self.kind == "geometric":
            return 1 / self.p
        return self.ms

    @property
    def is_immediate(self) -> bool:
        return self.kind == "fixed" and self.ms == 0

    def sample(self, rng: SecureRandom | None = None) -> float:
        rng = rng or default_random()
        if self.kind == "uniform":
            return self.lo_ms + (self.hi_ms - self.lo_ms) * rng.random()
        if self.kind == "geometric":
            return float(rng.geometric(self.p))
        return float(self.ms)

    def cdf(self, x: float) -> float:
        if self.kind == "uniform":
            return min(1.0, max(0.0, (x - self.lo_ms) / (self.hi_ms - self.lo_ms)))
        if self.kind == "geometric":
            k = math.floor(x)
            return 0.0 if k < 1 else 1.0 - (1.0 - self.p) ** k
        return 1.0 if x >= self.ms else 0.0

    def pmf(self, k: int) -> float:
        """P(ceil(X) == k) for integer k."""
        if self.kind == "fixed":
            return 1.0 if k == math.ceil(self.ms) else 0.0
        if self.kind == "geometric":
            return 0.0 if k < 1 else (1.0 - self.p) ** (k - 1) * self.p
        if float(self.lo_ms).is_integer() and float(self.hi_ms).is_integer():
            # whole-millisecond bounds: every bucket in (lo, hi] has the same mass
            return 1.0 / (self.hi_ms - self.lo_ms) if self.lo_ms < k <= self.hi_ms else 0.0
        return max(0.0, self.cdf(k) - self.cdf(k - 1))

    def tail(self, k: int) -> float:
        """P(ceil(X) > k)."""
        if self.kind == "geometric":
            return 1.0 if k < 1 else (1.0 - self.p) ** k
        return 1.0 - self.cdf(k)
