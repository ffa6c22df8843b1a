"""Acceptance criteria, each at its stated tolerance.

Every criterion prints one PASS/FAIL line (also repeated in the pytest
terminal summary).
"""

import math
import random
import time
from contextlib import contextmanager

import dns.message
import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS
from pirdns.analytics import CostInputs, EntropyScenario, T_E, cost_model, entropy, entropy_sweep, reflection_sim
from pirdns.ans.delay import DelayDistribution
from pirdns.cache import A, AAAA, IN, Slot, encode_record
from pirdns.client import FULL_ITERATIVE, PIR_HIT, SHORTCUT_ANS
from pirdns.harness.testbed import Testbed, TopologyConfig, answer_address
from pirdns.harness.trace import synth_domains
from pirdns.pir import LweParams, OpCounter, answer, extract, new_encoded_cache, query, setup_user, wire
from pirdns.randomness import SecureRandom

NOW = 1_700_000_000_000


@contextmanager
def criterion(n: int, title: str):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        line = f"ACCEPTANCE {n} FAIL  {title}  ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
        ACCEPTANCE_RESULTS.append(line)
        print(line)
        raise
    line = f"ACCEPTANCE {n} PASS  {title}  [{time.perf_counter() - t0:.1f}s]"
    ACCEPTANCE_RESULTS.append(line)
    print(line)


# 1 -----------------------------------------------------------------------------------------------

def test_1_pir_correctness():
    rng = SecureRandom()
    nprng = np.random.default_rng()
    configs = [(n, s, d) for n in (2 ** 6, 2 ** 8, 2 ** 10) for s in (32, 256) for d in (1, 2)]
    with criterion(1, "PIR correctness: extract(answer(query)) == slot, 12 configs x 100 trials"):
        for n, s, d in configs:
            params = LweParams.for_cache(n, s, dims=d)
            qk, pk = setup_user(n, params, rng)
            cache = new_encoded_cache(params)
            for _ in range(100):
                cache.digits[:] = nprng.integers(0, 256, size=cache.digits.shape, dtype=np.uint8)
                j = int(nprng.integers(1, n + 1))
                got = extract(qk, answer(pk, cache, query(qk, j, rng)))
                assert got == cache.digits[j - 1].tobytes(), (n, s, d, j)


# 2 -----------------------------------------------------------------------------------------------

def test_2_transcript_invariance():
    rng = SecureRandom()
    n = 2 ** 8
    with criterion(2, "transcript lengths and Answer op count identical across all 256 indices"):
        for dims in (1, 2):
            params = LweParams.for_cache(n, 256, dims=dims)
            qk, pk = setup_user(n, params, rng)
            cache = new_encoded_cache(params)
            cache.digits[:] = np.random.default_rng(2).integers(0, 256, cache.digits.shape, dtype=np.uint8)
            q_lens, r_lens, ops = set(), set(), set()
            for j in range(1, n + 1):
                q = query(qk, j, rng)
                counter = OpCounter()
                r = answer(pk, cache, q, counter)
                q_lens.add(len(wire.dump_query(q)))
                r_lens.add(len(wire.dump_response(r)))
                ops.add(counter.mul_acc)
            assert len(q_lens) == len(r_lens) == len(ops) == 1, (dims, q_lens, r_lens, ops)


# 3 -----------------------------------------------------------------------------------------------

def test_3_entropy_model():
    delta = 31
    uni = DelayDistribution.uniform(0, 2 * delta)
    geo = DelayDistribution.with_mean("geometric", delta)
    with criterion(3, "entropy: uniform ~ ln 2, geometric > 0.69, m-invariant, sweep shapes"):
        for s in range(1, delta):
            assert abs(entropy(EntropyScenario(delta, uni, s)).nats - math.log(2)) <= 0.01
        assert all(entropy(EntropyScenario(delta, geo, s)).nats > 0.69 for s in range(delta))
        for dist in (uni, geo):
            for s in (0, 13, 30):
                vals = [entropy(EntropyScenario(delta, dist, s, miss_rate=m)).nats for m in (0.1, 0.33, 0.9)]
                assert max(vals) - min(vals) <= 1e-12
        for kind in ("uniform", "geometric"):
            s_sweep = entropy_sweep("s", range(delta), kind)
            assert max(s_sweep.y) - min(s_sweep.y) < 0.05
            m_sweep = entropy_sweep("mean_delay", list(range(1, 3 * delta + 1)), kind)
            assert all(b >= a - 1e-12 for a, b in zip(m_sweep.y, m_sweep.y[1:]))
            assert m_sweep.y[m_sweep.x.index(delta)] >= T_E - 1e-12
            assert all(y >= T_E - 1e-12 for x, y in m_sweep.rows() if x >= delta)
            d_sweep = entropy_sweep("delta", range(10, 101), kind)
            assert (max(d_sweep.y) - min(d_sweep.y)) / np.mean(d_sweep.y) < 0.10


# 4 -----------------------------------------------------------------------------------------------

def test_4_cost_model():
    with criterion(4, "cost: $0.80/$1.60 compute, $0.40 egress, $2.30 burst, 186/93 users"):
        small = cost_model(CostInputs(qps_capacity=8))
        large = cost_model(CostInputs(qps_capacity=4))
        assert small.users_per_machine == 186 and large.users_per_machine == 93
        assert abs(small.compute_per_user - 0.80) <= 0.02
        assert abs(large.compute_per_user - 1.60) <= 0.02
        assert abs(small.egress_per_user - 0.40) <= 0.02
        assert abs(small.burst_compute_per_user - 2.30) <= 0.05


# 5 -----------------------------------------------------------------------------------------------

def test_5_reflection_defense():
    ttls = np.concatenate([np.full(40, 60), np.full(40, 60)])
    size = 150.0
    with criterion(5, "reflection: linear without defense (1..16), exact per-window cap with it"):
        counts = [1, 2, 4, 8, 16]
        rates = [reflection_sim(n, ttls, size, False, 180).mean_rate for n in counts]
        for n, r in zip(counts, rates):
            assert abs(r / (n * rates[0]) - 1) <= 0.05
        for n in counts:
            res = reflection_sim(n, ttls, size, True, 600)
            assert np.all(res.per_window_bytes == ttls.size * size), (n, res.per_window_bytes)


# 6 -----------------------------------------------------------------------------------------------

def test_6_end_to_end_protocol():
    t0 = time.perf_counter()
    domains = {"www.example.com": 300, "news.example.org": 300, "fast.example.net": 2}
    bed = Testbed(TopologyConfig(n_slots=2 ** 10, slot_bytes=256), domains)
    with criterion(6, "testbed: full walk, cross-client hit, shortcut, challenge, proof, forgery"):
        a = bed.add_client("10.9.0.1")
        b = bed.add_client("10.9.0.2")
        c = bed.add_client("10.9.0.3")
        out = a.resolve("www.example.com")
        assert out.source == FULL_ITERATIVE and out.answer == answer_address("www.example.com")
        out = b.resolve("www.example.com")
        assert out.source == PIR_HIT and out.answer == answer_address("www.example.com")

        a.resolve("fast.example.net")
        bed.advance(3_000)
        spy_before = len(b.raw_ans.contacts)
        out = b.resolve("fast.example.net")
        contacts = b.raw_ans.contacts[spy_before:]
        final = bed.final_for("fast.example.net").config.address4
        assert out.source == SHORTCUT_ANS and out.cache_status == "expired"
        assert contacts == [(final, "dns")]

        # honest miss inside the TTL window: entry lost, final server challenges, proof verifies
        bed.resolver.drop("www.example.com")
        old_backup = c.backups[0].qk.secret.copy()
        out = c.resolve("www.example.com")
        assert out.source == FULL_ITERATIVE and out.challenge is not None
        assert out.challenge.accepted and out.challenge.reason == "valid"
        assert not any(np.array_equal(old_backup, p.qk.secret) for p in c.backups)
        assert b.resolve("www.example.com").source == PIR_HIT

        # forged miss: the record is cached, the "proof" is a hit transcript
        fin = bed.final_for("www.example.com")
        _, info = fin.serve_query(dns.message.from_wire(a._final_query("www.example.com", A)), "10.9.0.1", bed.clock())
        assert info.challenged and info.populate_withheld
        pair = a.backups[0]
        _, t = a._pir_fetch(pair, "www.example.com", A)
        ok, reason = a.ans.proof(fin.config.address4, a.build_proof(pair, t).to_bytes())
        assert not ok and reason == "not-a-miss"
        assert time.perf_counter() - t0 < 60


# 7 -----------------------------------------------------------------------------------------------

def _oracle(cap, ops):
    items = []
    for rec in ops:
        items = [r for r in items if (r.digest, r.rtype) != (rec.digest, rec.rtype)]
        items = sorted(items + [rec], key=lambda r: r.expire_ts)
        while sum(r.size for r in items) > cap:
            items = items[1:]
    return items


def test_7_cache_layout():
    with criterion(7, "slots: 16 KB = 431 A / 264 AAAA, 512 B = 13 A, eviction == oracle x 10^4"):
        for rtype, ip, ans, want in ((A, "192.0.2.1", "198.51.100.1", 431), (AAAA, "2001:db8::1", "2001:db8::53", 264)):
            slot = Slot(16 * 1024)
            for i in range(want + 50):
                slot = slot.insert(encode_record(f"h{i}.example", rtype, IN, NOW + i, ip, ans))
            assert len(slot.records) == want
        small = Slot(512)
        for i in range(20):
            small = small.insert(encode_record(f"h{i}.example", A, IN, NOW + i, "192.0.2.1", "198.51.100.1"))
        assert len(small.records) == 13
        rnd = random.Random(7)
        pool = [encode_record(f"n{k}.test", rt, IN, NOW + rnd.randrange(10_000), *(
            ("192.0.2.1", "198.51.100.1") if rt == A else ("2001:db8::1", "2001:db8::53")))
            for k in range(40) for rt in (A, AAAA)]
        for _ in range(10_000):
            ops = [rnd.choice(pool) for _ in range(rnd.randrange(1, 16))]
            slot = Slot(256)
            for rec in ops:
                slot = slot.insert(rec)
            assert list(slot.records) == _oracle(256, ops)


# 8 -----------------------------------------------------------------------------------------------

def _patterns(domain: str) -> list[bytes]:
    labels = domain.split(".")
    out = [domain.encode(), b"".join(bytes([len(l)]) + l.encode() for l in labels)]
    out += [l.encode() for l in labels if len(l) >= 6]
    return out


def test_8_blindness():
    from test_resolver import _pirdns_imports

    names = synth_domains(100)
    bed = Testbed(TopologyConfig(n_slots=2 ** 6, slot_bytes=256), names)
    clients = [bed.add_client(f"10.9.1.{k}") for k in range(1, 5)]
    pats = sorted({p for d in names for p in _patterns(d)})
    rnd = random.Random(8)
    with criterion(8, "blindness: 1,000 resolutions leak no name bytes; query path has no record codec"):
        for c in clients:  # registration traffic too
            assert not any(p in blob for blob in c.raw_resolver.sent for p in pats)
            c.raw_resolver.sent.clear()
        for i in range(1000):
            c = clients[i % len(clients)]
            c.resolve(rnd.choice(names), AAAA if rnd.random() < 0.2 else A)
            for blob in c.raw_resolver.sent:
                for p in pats:
                    assert p not in blob, p
            c.raw_resolver.sent.clear()
            if i % 100 == 99:
                bed.advance(60_000)
        deps = _pirdns_imports("pirdns.resolver.answering")
        assert not any(d.startswith("pirdns.cache") for d in deps), sorted(deps)
