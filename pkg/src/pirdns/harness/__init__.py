"""Experiment harness: testbed, traces, benchmarks and the command line."""

from .bench import bench, bench_config, client_share
from .experiment import ExperimentReport, QueryRecord, run_experiment
from .latency import LinkShim, VirtualClock, WallClock, timer_ms
from .rank import RankDisruption, rank_disruption
from .testbed import Testbed, TopologyConfig
from .trace import TraceError, TraceEvent, read_csv, read_jsonl, read_trace, synth_trace, write_jsonl

__all__ = [
    "bench", "bench_config", "client_share", "ExperimentReport", "QueryRecord", "run_experiment", "LinkShim",
    "VirtualClock", "WallClock", "timer_ms", "RankDisruption", "rank_disruption", "Testbed", "TopologyConfig",
    "TraceError", "TraceEvent", "read_csv", "read_jsonl", "read_trace", "synth_trace", "write_jsonl",
]
