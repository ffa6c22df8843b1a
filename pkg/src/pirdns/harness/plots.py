"""Figures written next to the CSV reports (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def latency_cdf(records, path, title: str = "resolution latency") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    by_source: dict[str, list] = {}
    for r in records:
        by_source.setdefault(r.source, []).append(r.latency_ms)
    for src, vals in sorted(by_source.items()):
        v = np.sort(vals)
        ax.step(v, np.arange(1, v.size + 1) / v.size, where="post", label=f"{src} ({v.size})")
    ax.set_xlabel("latency (ms)")
    ax.set_ylabel("CDF")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def bench_lines(rows, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    keys = sorted({(r.op, r.slot_bytes) for r in rows})
    for op, s in keys:
        pts = sorted((r.n_slots, r.median_ms) for r in rows if r.op == op and r.slot_bytes == s)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{op} S={s}B")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("cache slots N")
    ax.set_ylabel("median time (ms)")
    ax.legend(fontsize=7)
    return _save(fig, path)


def xy(x, ys: dict, path, xlabel: str, ylabel: str, hline: float | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in ys.items():
        ax.plot(x, y, marker=".", label=label)
    if hline is not None:
        ax.axhline(hline, color="grey", linestyle="--", linewidth=1)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    return _save(fig, path)


def cdf(values, path, xlabel: str) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    v = np.sort(np.asarray(values))
    if v.size:
        ax.step(v, np.arange(1, v.size + 1) / v.size, where="post")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("CDF")
    return _save(fig, path)
