"""How well a random populate delay hides which query caused a cache miss.

Queries reach the resolver every ``delta`` ms; a populate arrives ``s`` ms
after the latest one. Candidate query i (i = 0, 1, ...) explains it with
weight m * P(X = s + i * delta). The attacker's uncertainty is the
Shannon entropy (nats) of the normalized weights; m cancels out.
Time is in whole milliseconds and P(X = k) means P(ceil(X) = k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..ans.delay import DelayDistribution

T_E = math.log(2)  # two equally likely culprits
MAX_CANDIDATES = 10_000_000


@dataclass(frozen=True)
class EntropyScenario:
    delta_ms: int
    dist: DelayDistribution
    s_ms: int = 0
    tail_epsilon: float = 1e-9
    miss_rate: float = 1.0

    def __post_init__(self):
        if self.delta_ms <= 0:
            raise ValueError("delta must be positive")
        if not 0 <= self.s_ms < self.delta_ms:
            raise ValueError("need 0 <= s < delta")
        if self.tail_epsilon <= 0:
            raise ValueError("tail_epsilon must be positive")
        if not 0 < self.miss_rate <= 1:
            raise ValueError("miss rate must be in (0, 1]")


@dataclass(frozen=True)
class EntropyResult:
    nats: float
    candidates: int  # candidates with nonzero weight
    degenerate: bool = False  # no candidate had any weight

    def __float__(self) -> float:
        return self.nats


def candidate_weights(sc: EntropyScenario) -> np.ndarray:
    weights = []
    i = 0
    while True:
        k = sc.s_ms + i * sc.delta_ms
        weights.append(sc.miss_rate * sc.dist.pmf(k))
        if sc.dist.tail(k) < sc.tail_epsilon:
            break
        i += 1
        if i > MAX_CANDIDATES:
            raise RuntimeError("tail did not vanish; check the distribution")
    return np.asarray(weights, dtype=float)


def entropy(sc: EntropyScenario) -> EntropyResult:
    w = candidate_weights(sc)
    total = w.sum()
    if total <= 0:
        return EntropyResult(0.0, 0, True)
    p = w[w > 0] / total
    return EntropyResult(float(-(p * np.log(p)).sum()), int(p.size))


def mean_entropy(delta_ms: int, dist: DelayDistribution, tail_epsilon: float = 1e-9) -> float:
    return float(np.mean([entropy(EntropyScenario(delta_ms, dist, s, tail_epsilon)).nats for s in range(delta_ms)]))


@dataclass
class Sweep:
    axis: str
    kind: str
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)

    def rows(self):
        return list(zip(self.x, self.y))


def entropy_sweep(axis: str, values, kind: str = "geometric", delta_ms: int = 31,
                  mean_ms: float | None = None, tail_epsilon: float = 1e-9) -> Sweep:
    """Entropy against one axis, the others held at their base values.

    ``s``: entropy at each offset with E[X] = mean (default delta).
    ``mean_delay``: average entropy over all s for each E[X].
    ``delta``: average entropy over all s for each delta, with E[X] = delta.
    """
    out = Sweep(axis, kind)
    for v in values:
        if axis == "s":
            dist = DelayDistribution.with_mean(kind, mean_ms or delta_ms)
            y = entropy(EntropyScenario(delta_ms, dist, int(v), tail_epsilon)).nats
        elif axis == "mean_delay":
            y = mean_entropy(delta_ms, DelayDistribution.with_mean(kind, v), tail_epsilon)
        elif axis == "delta":
            y = mean_entropy(int(v), DelayDistribution.with_mean(kind, v), tail_epsilon)
        else:
            raise ValueError(f"unknown sweep axis {axis!r}")
        out.x.append(v)
        out.y.append(y)
    return out
