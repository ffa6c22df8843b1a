import math

import numpy as np
import pytest

from pirdns.analytics import (CostInputs, EntropyScenario, T_E, cost_model, entropy, entropy_sweep,
                              random_attack_schedule, reflection_sim)
from pirdns.analytics.entropy import candidate_weights
from pirdns.ans.delay import DelayDistribution as D
from pirdns.ans.ledger import ALLOW, PopulationLedger

DELTA = 31


def brute_entropy(delta, dist, s, horizon=200_000):
    # independent oracle: sample ceil-bucketed delays and histogram by candidate
    w = np.array([dist.pmf(k) for k in range(s, horizon, delta)])
    w = w[w > 0] / w.sum()
    return float(-(w * np.log(w)).sum())


@pytest.mark.parametrize("s", [1, 7, 15, 30])
def test_uniform_two_delta_is_ln2(s):
    assert entropy(EntropyScenario(DELTA, D.uniform(0, 2 * DELTA), s)).nats == pytest.approx(math.log(2), abs=1e-12)


def test_geometric_above_threshold_everywhere():
    g = D.with_mean("geometric", DELTA)
    vals = [entropy(EntropyScenario(DELTA, g, s)).nats for s in range(DELTA)]
    assert min(vals) > 0.69
    assert max(vals) - min(vals) < 0.05


def test_geometric_matches_truncation_free_oracle():
    g = D.geometric(1 / DELTA)
    for s in (0, 10, 30):
        assert entropy(EntropyScenario(DELTA, g, s)).nats == pytest.approx(brute_entropy(DELTA, g, s), abs=1e-7)
    # closed form: weights form a geometric series with ratio r = (1-p)^delta
    r = (1 - 1 / DELTA) ** DELTA
    closed = -math.log(1 - r) - r * math.log(r) / (1 - r)
    assert entropy(EntropyScenario(DELTA, g, 5)).nats == pytest.approx(closed, abs=1e-7)


def test_fixed_zero_is_degenerate():
    r0 = entropy(EntropyScenario(DELTA, D.fixed(0), 0))
    assert r0.nats == 0 and r0.candidates == 1 and not r0.degenerate
    r1 = entropy(EntropyScenario(DELTA, D.fixed(0), 4))
    assert r1.nats == 0 and r1.degenerate


@pytest.mark.parametrize("dist", [D.uniform(0, 62), D.geometric(1 / 31), D.uniform(3, 90)])
def test_invariant_in_miss_rate(dist):
    vals = [entropy(EntropyScenario(DELTA, dist, 9, miss_rate=m)).nats for m in (0.1, 0.33, 0.9)]
    assert max(vals) - min(vals) <= 1e-12


def test_weights_scale_with_miss_rate_but_entropy_does_not():
    a = candidate_weights(EntropyScenario(DELTA, D.geometric(0.05), 3, miss_rate=0.1))
    b = candidate_weights(EntropyScenario(DELTA, D.geometric(0.05), 3, miss_rate=0.9))
    assert np.allclose(b, 9 * a)


def test_entropy_nonnegative_and_zero_iff_single_candidate():
    for dist in (D.uniform(0, 10), D.uniform(0, 40), D.geometric(0.9), D.fixed(12)):
        for s in range(DELTA):
            r = entropy(EntropyScenario(DELTA, dist, s))
            assert r.nats >= 0
            assert (r.nats == 0) == (r.candidates <= 1)


@pytest.mark.parametrize("kind", ["uniform", "geometric"])
def test_sweeps(kind):
    s = entropy_sweep("s", range(DELTA), kind)
    assert max(s.y) - min(s.y) < 0.05
    m = entropy_sweep("mean_delay", [2, 5, 10, 20, 31, 40, 62, 93], kind)
    assert all(b >= a - 1e-12 for a, b in zip(m.y, m.y[1:]))
    assert m.y[m.x.index(31)] >= T_E - 1e-12
    d = entropy_sweep("delta", range(10, 101, 10), kind)
    assert (max(d.y) - min(d.y)) / np.mean(d.y) < 0.10


def test_bad_scenarios():
    with pytest.raises(ValueError):
        EntropyScenario(31, D.fixed(0), 31)
    with pytest.raises(ValueError):
        EntropyScenario(31, D.fixed(0), 0, tail_epsilon=0)
    with pytest.raises(ValueError):
        entropy_sweep("nope", [1])


# -- cost -------------------------------------------------------------------------------------

def test_cost_small_and_large_cache():
    small = cost_model(CostInputs())
    large = cost_model(CostInputs(qps_capacity=4))
    assert small.users_per_machine == 186 and large.users_per_machine == 93
    assert small.compute_per_user == pytest.approx(0.80, abs=0.02)
    assert large.compute_per_user == pytest.approx(1.60, abs=0.02)
    assert small.egress_per_user == pytest.approx(0.40, abs=0.02)
    assert small.burst_machines == 16
    assert small.burst_compute_per_user == pytest.approx(2.30, abs=0.05)


def test_cost_homogeneous_in_machine_cost():
    a = cost_model(CostInputs())
    b = cost_model(CostInputs(machine_monthly_cost=3 * 149.0))
    assert b.compute_per_user == pytest.approx(3 * a.compute_per_user)
    assert b.burst_compute_per_user == pytest.approx(3 * a.burst_compute_per_user)
    assert b.egress_per_user == a.egress_per_user


def test_cost_rejects_nonpositive():
    with pytest.raises(ValueError):
        CostInputs(qps_capacity=0)


# -- reflection -------------------------------------------------------------------------------

TTLS = np.full(50, 60)


def test_defense_off_linear():
    rates = [reflection_sim(n, TTLS, 500, False, 120).mean_rate for n in (1, 2, 4, 8, 16)]
    for n, r in zip((1, 2, 4, 8, 16), rates):
        assert r == pytest.approx(n * rates[0], rel=0.05)
    capped = reflection_sim(16, TTLS, 500, False, 10, ans_bw_gbps=10).bytes_per_s
    assert capped.max() == pytest.approx(10e9 / 8)


@pytest.mark.parametrize("n", [1, 5, 40])
def test_defense_on_cap_reached_exactly(n):
    res = reflection_sim(n, TTLS, 500, True, 600)
    assert np.all(res.per_window_bytes == TTLS.size * 500)


def test_defense_on_half_coverage():
    from pirdns.analytics import Attacker
    half = np.arange(0, 50, 2)
    res = reflection_sim(0, TTLS, 500, True, 600, attackers=[Attacker(domains=half), Attacker(domains=half)])
    assert np.all(res.per_window_bytes == 0.5 * TTLS.size * 500)


def test_defense_on_cap_holds_for_random_schedules():
    rng = np.random.default_rng(3)
    for trial in range(20):
        ttl = rng.integers(5, 90, size=30)
        atk = random_attack_schedule(rng, int(rng.integers(1, 20)), ttl.size, 400, coverage=rng.uniform(0.1, 1))
        res = reflection_sim(0, ttl, 300, True, 400, attackers=atk, window_s=int(ttl.min()))
        assert res.per_window_bytes.max() <= res.cap_per_window
        # per domain: populates at most once per its own TTL
        assert np.all(res.populations <= -(-400 // ttl))


def test_simulator_agrees_with_population_ledger():
    rng = np.random.default_rng(9)
    ttl = rng.integers(3, 20, size=8)
    atk = random_attack_schedule(rng, 4, ttl.size, 100)
    res = reflection_sim(0, ttl, 1, True, 100, attackers=atk)
    ledger = PopulationLedger()
    counts = np.zeros(ttl.size, dtype=int)
    for t in range(100):
        for d in range(ttl.size):
            if any(a.start_s <= t < a.stop_s and d in a.domains for a in atk):
                if ledger.claim("rer", f"d{d}", t * 1000, int(ttl[d]) * 1000) == ALLOW:
                    counts[d] += 1
    assert np.array_equal(counts, res.populations)
