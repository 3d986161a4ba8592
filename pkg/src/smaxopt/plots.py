"""Figure rendering from emitted traces and sweep summaries."""

from __future__ import annotations

import csv
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_trace(path: str) -> dict[str, list[float]]:
    cols: dict[str, list[float]] = {}
    with open(path) as fh:
        for row in csv.DictReader(fh):
            for key, val in row.items():
                cols.setdefault(key, []).append(float(val))
    if "iter" not in cols:
        raise ValueError(f"{path}: not a trace file (no 'iter' column)")
    return cols


def plot_trace(trace_path: str, out_path: str, title: str | None = None) -> str:
    """Render convergence curves (f, f_mu, gap estimate) from one trace CSV."""
    cols = _read_trace(trace_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    it = cols["iter"]
    floor = min(v for v in cols["f"] if math.isfinite(v))
    shift = abs(floor) * 1e-12 + 1e-16
    ax.semilogy(it, [v - floor + shift for v in cols["f"]], label="f - best f")
    if any(math.isfinite(v) for v in cols["f_mu"]):
        ax.semilogy(it, [v - floor + shift for v in cols["f_mu"]], label="f_mu - best f")
    if any(math.isfinite(v) for v in cols["gap_est"]):
        ax.semilogy(it, cols["gap_est"], label="gap estimate", linestyle="--")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective above best")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_summary(summary_path: str, out_path: str) -> str:
    """Iterations versus eps per method, log-log, from a sweep summary CSV."""
    series: dict[str, list[tuple[float, float]]] = {}
    with open(summary_path) as fh:
        for row in csv.DictReader(fh):
            try:
                eps = float(row["eps"])
                iters = float(row["iters"])
            except (KeyError, ValueError):
                continue
            series.setdefault(row["method"], []).append((eps, iters))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method, pts in sorted(series.items()):
        pts.sort()
        ax.loglog([p[0] for p in pts], [max(p[1], 1.0) for p in pts],
                  marker="o", label=method)
    ax.set_xlabel("eps")
    ax.set_ylabel("iterations")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    ax.invert_xaxis()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
