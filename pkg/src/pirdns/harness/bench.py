"""Micro-benchmarks of the PIR primitives over cache-size and slot-size sweeps."""

from __future__ import annotations

import csv
import gc
import io
import time
from dataclasses import asdict, dataclass

import numpy as np

from ..pir import wire
from ..pir.params import LweParams
from ..pir.scheme import answer, extract, index, new_encoded_cache, query, setup_server, setup_user
from ..randomness import SecureRandom

OPS = ("index", "query", "answer", "extract", "setup", "keygen")
CLIENT_OPS = ("index", "query", "extract")


@dataclass
class BenchRow:
    op: str
    n_slots: int
    slot_bytes: int
    dims: int
    reps: int
    runs: int
    median_ms: float
    mean_ms: float
    min_ms: float
    cv: float  # across the per-run minimums; interference only ever adds time
    query_bytes: int
    response_bytes: int


MIN_SAMPLE_MS = 5.0  # fast ops are timed in batches at least this long


def _batch(fn) -> int:
    """Calls per sample so one sample lasts MIN_SAMPLE_MS (timeit-style autorange)."""
    t0 = time.perf_counter()
    fn()
    took = (time.perf_counter() - t0) * 1000
    return max(1, int(np.ceil(MIN_SAMPLE_MS / max(took, 1e-6))))


def _sample(fn, batch: int) -> float:
    """Per-call milliseconds over one batch."""
    t0 = time.perf_counter()
    for _ in range(batch):
        fn()
    return (time.perf_counter() - t0) * 1000 / batch


def bench_config(n_slots: int, slot_bytes: int, dims: int = 1, ops=OPS, reps: int = 10, runs: int = 3,
                 seed: int | None = None, warmup: int = 2) -> list[BenchRow]:
    rng = SecureRandom(seed) if seed is not None else SecureRandom()
    params = LweParams.for_cache(n_slots, slot_bytes, dims=dims)
    qk, pk = setup_user(n_slots, params, rng)
    cache = new_encoded_cache(params)
    noise = np.frombuffer(rng.bytes(cache.digits.size), dtype=np.uint8).reshape(cache.digits.shape)
    cache.digits[:] = noise & np.uint8(params.p - 1)
    target = n_slots // 2 + 1
    q = query(qk, target, rng)
    r = answer(pk, cache, q)
    q_len, r_len = len(wire.dump_query(q)), len(wire.dump_response(r))
    slot = rng.bytes(slot_bytes)
    fns = {
        "index": lambda: index(b"www.example.com", n_slots),
        "query": lambda: query(qk, target, rng),
        "answer": lambda: answer(pk, cache, q),
        "extract": lambda: extract(qk, r),
        "setup": lambda: setup_server(cache, target, slot),
        "keygen": lambda: setup_user(n_slots, params, rng),
    }
    # samples are interleaved (rep, run, op) so every run and every op spans the
    # whole measurement window; slow phases of the host then hit all of them alike
    batches = {}
    for op in ops:
        for _ in range(warmup):
            fns[op]()
        batches[op] = _batch(fns[op])
    samples = {op: np.empty((runs, reps)) for op in ops}
    enabled = gc.isenabled()
    gc.collect()
    gc.disable()  # as timeit does: keep collector pauses out of the samples
    try:
        for i in range(reps):
            for k in range(runs):
                for op in ops:
                    samples[op][k, i] = _sample(fns[op], batches[op])
    finally:
        if enabled:
            gc.enable()
    rows = []
    for op in ops:
        s = samples[op]
        mins = s.min(axis=1)
        cv = float(mins.std() / mins.mean()) if mins.mean() > 0 else 0.0
        rows.append(BenchRow(op, n_slots, slot_bytes, dims, reps, runs, float(np.median(s)),
                             float(s.mean()), float(s.min()), cv, q_len, r_len))
    return rows


def bench(ops=OPS, n_slots_sweep=(64, 256, 1024), slot_bytes_sweep=(32, 256), dims: int = 1,
          reps: int = 10, runs: int = 3, seed: int | None = None) -> list[BenchRow]:
    rows = []
    for n in n_slots_sweep:
        for s in slot_bytes_sweep:
            rows.extend(bench_config(n, s, dims, ops, reps, runs, seed))
    return rows


def rows_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    cols = list(BenchRow.__dataclass_fields__)
    w = csv.DictWriter(buf, cols)
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))
    return buf.getvalue()


def lookup(rows, op, n_slots, slot_bytes) -> BenchRow:
    for r in rows:
        if (r.op, r.n_slots, r.slot_bytes) == (op, n_slots, slot_bytes):
            return r
    raise KeyError((op, n_slots, slot_bytes))


def client_share(rows, n_slots: int, slot_bytes: int) -> float:
    """(index + query + extract) / answer at one configuration."""
    client = sum(lookup(rows, op, n_slots, slot_bytes).median_ms for op in CLIENT_OPS)
    return client / lookup(rows, "answer", n_slots, slot_bytes).median_ms
