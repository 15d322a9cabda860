"""Report figures rendered next to the CSV artifacts.

Every function takes already-computed arrays plus an output path and writes a
PNG; nothing here recomputes experiment results. The Agg backend is forced so
figure rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_trace_figure(iterations, objectives, path) -> None:
    """Objective value against iteration, log scale when values allow it."""
    iterations = np.asarray(iterations)
    objectives = np.asarray(objectives, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(iterations, objectives, lw=1.2)
    if objectives.min() > 0.0:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.set_title("matching objective")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_match_scatter(X, Y, path) -> None:
    """Inputs vs matched outputs for 2D point data."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(X[:, 0], X[:, 1], s=28, c="tab:blue", alpha=0.6, label="input")
    ax.scatter(Y[:, 0], Y[:, 1], s=40, c="tab:red", marker="x", label="matched")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_curve_figure(points, path) -> None:
    """Mean final objective with std error bars against output count n."""
    n = [p.n for p in points]
    mean = [p.mean for p in points]
    std = [p.std for p in points]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(n, mean, yerr=std, marker="o", capsize=3, lw=1.2)
    ax.set_xlabel("n (outputs)")
    ax.set_ylabel("final objective")
    ax.set_title("objective vs n")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_bench_figure(cells, path) -> None:
    """Per-iteration wall time against n, one line per input count m."""
    fig, ax = plt.subplots(figsize=(6, 4))
    by_m = {}
    for c in cells:
        by_m.setdefault(c.m, []).append((c.n, c.ms_per_iter))
    for m in sorted(by_m):
        pts = sorted(by_m[m])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"m={m}")
    ax.set_xlabel("n (outputs)")
    ax.set_ylabel("ms per iteration")
    ax.set_title("runtime vs n")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_grid_figure(triples, objectives, path) -> None:
    """Final objective over the weight simplex, drawn in triangle coordinates."""
    triples = np.asarray(triples, dtype=np.float64)
    objectives = np.asarray(objectives, dtype=np.float64)
    # barycentric -> 2D: corners (0,0), (1,0), (0.5, sqrt(3)/2)
    xs = triples[:, 1] + 0.5 * triples[:, 2]
    ys = (np.sqrt(3.0) / 2.0) * triples[:, 2]
    fig, ax = plt.subplots(figsize=(5.5, 5))
    sc = ax.scatter(xs, ys, c=objectives, s=60, cmap="viridis")
    fig.colorbar(sc, ax=ax, label="final objective")
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])
    for xy, lab in (((0, 0), "w1"), ((1, 0), "w2"), ((0.5, np.sqrt(3.0) / 2.0), "w3")):
        ax.annotate(lab, xy, textcoords="offset points", xytext=(0, 6), ha="center")
    ax.set_title("weight-grid objectives")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
