"""``pirdns`` command line: servers, client proxy, experiments and analyses.

Reports go to ``--out`` (or stdout). When ``--out`` names a file, a PNG
figure with the same stem is written next to it.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

log = logging.getLogger("pirdns.cli")


# -- helpers ------------------------------------------------------------------------------

def _emit(text: str, out: str | None) -> Path | None:
    if not out:
        sys.stdout.write(text)
        return None
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _figure(out: Path | None, suffix: str = "") -> Path | None:
    return None if out is None else out.with_name(out.stem + suffix + ".png")


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def load_or_create_key(path: str) -> Ed25519PrivateKey:
    """PEM (PKCS8) private key; created on first use, with the raw public key hex in ``<path>.pub``."""
    p = Path(path)
    if p.exists():
        key = serialization.load_pem_private_key(p.read_bytes(), password=None)
        if not isinstance(key, Ed25519PrivateKey):
            raise SystemExit(f"{path} is not an Ed25519 key")
    else:
        key = Ed25519PrivateKey.generate()
        p.write_bytes(key.private_bytes(serialization.Encoding.PEM, serialization.PrivateFormat.PKCS8,
                                        serialization.NoEncryption()))
    from ..resolver.signing import public_bytes
    Path(str(p) + ".pub").write_text(public_bytes(key.public_key()).hex() + "\n")
    return key


def _pairs(items, what: str) -> dict[str, str]:
    out = {}
    for item in items or []:
        k, sep, v = item.partition("=")
        if not sep:
            raise SystemExit(f"{what} must look like ADDRESS=VALUE, got {item!r}")
        out[k] = v
    return out


def _serve_forever(*servers) -> None:
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        for s in servers:
            s.shutdown()


# -- servers --------------------------------------------------------------------------------

def cmd_run_rer(a) -> int:
    from ..cache.store import CacheConfig
    from ..httpio import serve_in_thread
    from ..pir.params import LweParams
    from ..resolver.http import make_resolver_server
    from ..resolver.service import ResolverService
    from ..resolver.signing import TranscriptSigner, load_public
    from ..resolver.trust import TrustEntry, TrustRegistry

    trust = TrustRegistry()
    if a.trust:
        for zone, e in json.loads(Path(a.trust).read_text()).items():
            trust.add(zone, TrustEntry(e["identity"], load_public(bytes.fromhex(e["key"])), e.get("endpoint", "")))
    signer = TranscriptSigner(load_or_create_key(a.key) if a.key else None)
    service = ResolverService(CacheConfig(a.n_slots, a.slot_bytes),
                              LweParams.for_cache(a.n_slots, a.slot_bytes, dims=a.dims),
                              trust=trust, signer=signer, workers=a.workers)
    server = make_resolver_server(service, a.host, a.port, a.tls_cert, a.tls_key)
    serve_in_thread(server)
    print(json.dumps({"listening": f"{a.host}:{server.server_address[1]}",
                      "verification_key": service.advertisement()["verification_key"]}), flush=True)
    _serve_forever(server)
    return 0


def http_sink(rer_urls: dict[str, str]):
    """Populate sink that POSTs to each resolver's /v1/populate."""
    from ..httpio import HttpError, request

    def sink(rer: str, msg: bytes, sender: str) -> bool:
        url = rer_urls.get(rer)
        if url is None:
            raise ConnectionError(f"no URL for resolver {rer}")
        try:
            body, _ = request(url.rstrip("/") + "/v1/populate", msg, {"X-Ans-Identity": sender})
        except HttpError as exc:
            body = exc.body
        return bool(json.loads(body).get("accepted"))

    return sink


def cmd_run_ans(a) -> int:
    from ..ans.delay import DelayDistribution
    from ..ans.http import make_ans_server, make_udp_server
    from ..ans.server import AnsConfig, AnsServer
    from ..ans.zone import Zone
    from ..httpio import serve_in_thread
    from ..resolver.signing import load_public

    zone = Zone.load(a.zone)
    rer_urls = _pairs(a.rer, "--rer")
    rer_keys = {k: load_public(bytes.fromhex(v)) for k, v in _pairs(a.rer_key, "--rer-key").items()}
    cfg = AnsConfig(a.identity or f"ans-{zone.origin or 'root'}", zone, a.address4, a.address6,
                    DelayDistribution.parse(a.delay))
    ans = AnsServer(cfg, load_or_create_key(a.key) if a.key else None, http_sink(rer_urls), rer_keys)
    ans.dispatcher.start()
    server = make_ans_server(ans, a.host, a.port, a.trust_forwarded, a.tls_cert, a.tls_key)
    serve_in_thread(server)
    servers = [server]
    info = {"listening": f"{a.host}:{server.server_address[1]}", "zone": zone.origin, "identity": cfg.identity}
    if a.udp_port is not None:
        udp = make_udp_server(ans, a.host, a.udp_port)
        serve_in_thread(udp)
        servers.append(udp)
        info["udp"] = f"{a.host}:{udp.server_address[1]}"
    print(json.dumps(info), flush=True)
    _serve_forever(*servers)
    ans.dispatcher.stop()
    return 0


def cmd_run_client(a) -> int:
    from ..cache.record import AAAA, A
    from ..client.config import ClientConfig
    from ..client.proxy import ClientProxy
    from ..client.stub import StubListener
    from ..client.transport import HttpAns, HttpResolver

    cfg = ClientConfig.load(a.config)
    if cfg.log_file:
        handler = logging.FileHandler(cfg.log_file)
        handler.setFormatter(logging.Formatter("%(message)s"))
        logging.getLogger("pirdns.client").addHandler(handler)
        logging.getLogger("pirdns.client").setLevel(logging.INFO)
    proxy = ClientProxy(HttpResolver(cfg.resolver_url, keep_sent=False), HttpAns(cfg.ans_urls, cfg.client_ip),
                        cfg.root_hints, cfg.rer_address, backup_pool=cfg.backup_pool).setup()
    if a.resolve:
        for name in a.resolve:
            out = proxy.resolve(name, AAAA if a.aaaa else A)
            print(json.dumps(out.log_fields()), flush=True)
        return 0
    host, port = cfg.listen_addr
    stub = StubListener(proxy, host, port).start()
    print(json.dumps({"listening": "%s:%d" % stub.address}), flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        stub.stop()
    return 0


# -- experiments -------------------------------------------------------------------------------

def cmd_run_experiment(a) -> int:
    from . import plots
    from .experiment import run_experiment
    from .testbed import TopologyConfig
    from .trace import TraceError, read_trace

    try:
        trace = read_trace(a.trace)
    except (TraceError, OSError) as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return 2
    topo = TopologyConfig.load(a.topology) if a.topology else TopologyConfig()
    report = run_experiment(topo, trace, a.duration_ms, a.seed)
    out = _emit(report.records_csv(), a.out)
    if out is not None:
        out.with_suffix(".summary.json").write_text(report.summary_json())
        plots.latency_cdf(report.records, _figure(out))
    else:
        print(report.summary_json(), file=sys.stderr)
    return 0


def cmd_bench(a) -> int:
    from . import plots
    from .bench import OPS, bench, rows_csv

    ops = a.ops.split(",") if a.ops != "all" else list(OPS)
    for op in ops:
        if op not in OPS:
            raise SystemExit(f"unknown op {op}; choose from {', '.join(OPS)}")
    rows = bench(ops, _ints(a.n_slots), _ints(a.slot_bytes), a.dims, a.reps, a.runs, a.seed)
    out = _emit(rows_csv(rows), a.out)
    if out is not None:
        plots.bench_lines(rows, _figure(out))
    return 0


def cmd_synth_trace(a) -> int:
    from .trace import dumps, synth_trace

    ttls = tuple((int(t), 1.0) for t in _ints(a.ttls)) if a.ttls else None
    kw = {"ttls": ttls} if ttls else {}
    events = synth_trace(a.clients, a.domains, a.zipf, rate_qps=a.rate, duration_s=a.duration, seed=a.seed,
                         aaaa_fraction=a.aaaa_fraction, **kw)
    _emit(dumps(events), a.out)
    return 0


# -- analyses --------------------------------------------------------------------------------------

def cmd_entropy(a) -> int:
    from ..analytics.entropy import T_E, entropy_sweep
    from . import plots

    if a.values:
        xs = _floats(a.values)
    else:
        xs = {"s": range(a.delta), "mean_delay": range(1, 3 * a.delta + 1), "delta": range(10, 101, 5)}[a.axis]
        xs = list(xs)
    kinds = ["uniform", "geometric"] if a.kind == "both" else [a.kind]
    sweeps = {k: entropy_sweep(a.axis, xs, k, a.delta) for k in kinds}
    header = ["x"] + [f"entropy_{k}" for k in kinds]
    rows = [[x] + [f"{sweeps[k].y[i]:.6f}" for k in kinds] for i, x in enumerate(xs)]
    out = _emit(_csv(header, rows), a.out)
    if out is not None:
        plots.xy(xs, {k: sweeps[k].y for k in kinds}, _figure(out),
                 {"s": "s (ms)", "mean_delay": "E[X] (ms)", "delta": "delta (ms)"}[a.axis], "entropy (nats)", T_E)
    return 0


def cmd_reflection(a) -> int:
    from ..analytics.reflection import reflection_sim
    from . import plots

    ttls = np.full(a.domains, a.ttl)
    counts = _ints(a.attackers)
    modes = {"on": [True], "off": [False], "both": [False, True]}[a.defense]
    rows, series = [], {}
    for defense in modes:
        rates = []
        for n in counts:
            res = reflection_sim(n, ttls, a.populate_size, defense, a.horizon, a.bandwidth_gbps,
                                 ans_bw_gbps=a.ans_cap_gbps)
            rates.append(res.mean_rate)
            rows.append(["on" if defense else "off", n, f"{res.mean_rate:.1f}", f"{res.per_window_bytes.max():.1f}"])
        series["defense " + ("on" if defense else "off")] = rates
    out = _emit(_csv(["defense", "attackers", "mean_bytes_per_s", "max_window_bytes"], rows), a.out)
    if out is not None:
        plots.xy(counts, series, _figure(out), "attackers", "reflected bytes/s")
    return 0


def cmd_cost(a) -> int:
    from ..analytics.cost import CostInputs, cost_model

    inp = CostInputs(a.queries_per_day, a.qps, a.machine_cost, a.egress_per_gb, a.response_kb, a.burst_qps,
                     a.burst_users)
    _emit(json.dumps({"inputs": inp.__dict__, "per_user": cost_model(inp).to_dict()}, indent=2) + "\n", a.out)
    return 0


def cmd_rank(a) -> int:
    import csv

    from . import plots
    from .rank import rank_disruption

    with open(a.records, newline="") as fh:
        rows = list(csv.DictReader(fh))
    res = rank_disruption([r["domain"] for r in rows], [r["domain"] for r in rows if r["source"] != "pir_hit"])
    if res.empty:
        out = _emit("abs_rank_diff,cdf\n# empty: no name-server-visible events\n", a.out)
        return 0
    x, y = res.cdf()
    out = _emit(_csv(["abs_rank_diff", "cdf"], [[int(i), f"{j:.6f}"] for i, j in zip(x, y)]), a.out)
    if out is not None:
        plots.cdf(res.diffs, _figure(out), "|rank difference|")
    return 0


# -- parser ----------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pirdns", description="Private DNS over stateless PIR: servers and harness")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    def tls(sp):
        sp.add_argument("--tls-cert")
        sp.add_argument("--tls-key")

    sp = sub.add_parser("run-rer", help="serve the blind resolver over HTTP")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8053)
    sp.add_argument("--n-slots", type=int, default=1024)
    sp.add_argument("--slot-bytes", type=int, default=256)
    sp.add_argument("--dims", type=int, choices=(1, 2), default=1)
    sp.add_argument("--workers", type=int, default=4)
    sp.add_argument("--key", help="PEM signing key (created if missing)")
    sp.add_argument("--trust", help="JSON: zone -> {identity, key (hex), endpoint}")
    tls(sp)
    sp.set_defaults(fn=cmd_run_rer)

    sp = sub.add_parser("run-ans", help="serve one zone over DoH (and optionally UDP)")
    sp.add_argument("--zone", required=True, help="zone file")
    sp.add_argument("--identity")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8054)
    sp.add_argument("--udp-port", type=int)
    sp.add_argument("--address4")
    sp.add_argument("--address6")
    sp.add_argument("--delay", default="uniform:0:62", help="uniform:LO:HI | geometric:P | fixed:MS")
    sp.add_argument("--key", help="PEM signing key (created if missing)")
    sp.add_argument("--rer", action="append", help="RER_ADDRESS=URL of its HTTP endpoint")
    sp.add_argument("--rer-key", action="append", help="RER_ADDRESS=hex transcript verification key")
    sp.add_argument("--trust-forwarded", action="store_true", help="take the sender IP from X-Forwarded-For")
    tls(sp)
    sp.set_defaults(fn=cmd_run_ans)

    sp = sub.add_parser("run-client", help="run the client proxy as a local DNS stub")
    sp.add_argument("--config", required=True)
    sp.add_argument("--resolve", nargs="*", help="resolve these names once and exit")
    sp.add_argument("--aaaa", action="store_true")
    sp.set_defaults(fn=cmd_run_client)

    sp = sub.add_parser("run-experiment", help="replay a trace through the in-process testbed")
    sp.add_argument("--topology")
    sp.add_argument("--trace", required=True, help="JSONL trace (or .csv with ts,client,domain)")
    sp.add_argument("--duration-ms", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_run_experiment)

    sp = sub.add_parser("bench", help="time PIR primitives over N and S sweeps")
    sp.add_argument("--ops", default="all")
    sp.add_argument("--n-slots", default="64,256,1024")
    sp.add_argument("--slot-bytes", default="32,256")
    sp.add_argument("--dims", type=int, choices=(1, 2), default=1)
    sp.add_argument("--reps", type=int, default=10)
    sp.add_argument("--runs", type=int, default=3)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_bench)

    sp = sub.add_parser("synth-trace", help="generate a Zipf workload trace")
    sp.add_argument("--clients", type=int, default=10)
    sp.add_argument("--domains", type=int, default=200)
    sp.add_argument("--zipf", type=float, default=1.0)
    sp.add_argument("--rate", type=float, default=10.0, help="queries per second")
    sp.add_argument("--duration", type=float, default=60.0, help="seconds")
    sp.add_argument("--ttls", help="comma-separated TTL choices in seconds (equal weight)")
    sp.add_argument("--aaaa-fraction", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_synth_trace)

    an = sub.add_parser("analyze", help="analytic models").add_subparsers(dest="what", required=True)
    sp = an.add_parser("entropy")
    sp.add_argument("--axis", choices=("s", "mean_delay", "delta"), default="s")
    sp.add_argument("--kind", choices=("uniform", "geometric", "both"), default="both")
    sp.add_argument("--delta", type=int, default=31)
    sp.add_argument("--values", help="comma-separated x values")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_entropy)

    sp = an.add_parser("reflection")
    sp.add_argument("--attackers", default="1,2,4,8,16")
    sp.add_argument("--domains", type=int, default=100)
    sp.add_argument("--ttl", type=int, default=60)
    sp.add_argument("--populate-size", type=float, default=120.0)
    sp.add_argument("--horizon", type=int, default=600)
    sp.add_argument("--bandwidth-gbps", type=float, default=1.0)
    sp.add_argument("--ans-cap-gbps", type=float)
    sp.add_argument("--defense", choices=("on", "off", "both"), default="both")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_reflection)

    sp = an.add_parser("cost")
    sp.add_argument("--queries-per-day", type=float, default=3724)
    sp.add_argument("--qps", type=float, default=8)
    sp.add_argument("--machine-cost", type=float, default=149.0)
    sp.add_argument("--egress-per-gb", type=float, default=0.09)
    sp.add_argument("--response-kb", type=float, default=40)
    sp.add_argument("--burst-qps", type=float, default=126)
    sp.add_argument("--burst-users", type=int, default=1033)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_cost)

    sp = an.add_parser("rank")
    sp.add_argument("--records", required=True, help="per-query CSV written by run-experiment")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_rank)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    return args.fn(args) or 0


if __name__ == "__main__":
    sys.exit(main())
