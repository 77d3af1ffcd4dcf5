"""Figures for clustering reports and mixing sweeps.

Uses the object-oriented matplotlib API (no pyplot state), so figures can be
rendered from any thread and without a display.
"""
from __future__ import annotations

import functools
import math
from collections import defaultdict

import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

GOLDEN = (math.sqrt(5) - 1.0) / 2.0

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
}


def _figure(width: float = 5.0, height: float | None = None) -> Figure:
    fig = Figure(figsize=(width, height or width * GOLDEN), constrained_layout=True)
    FigureCanvasAgg(fig)
    return fig


def _styled(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with matplotlib.rc_context(STYLE):
            return fn(*args, **kwargs)
    return wrapper


def _save(fig: Figure, path) -> None:
    fig.savefig(path, dpi=150)


@_styled
def plot_cluster_sizes(sizes, path, title: str | None = None) -> None:
    """Histogram of cluster sizes on logarithmic bins."""
    sizes = np.asarray(sizes)
    fig = _figure()
    ax = fig.add_subplot()
    if len(sizes):
        top = max(int(sizes.max()), 1)
        bins = np.unique(np.geomspace(1, top + 1, num=min(30, top + 1)).astype(int))
        if len(bins) < 2:
            bins = np.array([1, 2])
        ax.hist(sizes, bins=bins, color="0.3", edgecolor="white")
        ax.set_xscale("log")
    ax.set_xlabel("cluster size (nodes)")
    ax.set_ylabel("clusters")
    if title:
        ax.set_title(title)
    _save(fig, path)


@_styled
def plot_round_moves(levels, path) -> None:
    """Moves per local-moving round, one line per level."""
    fig = _figure()
    ax = fig.add_subplot()
    for info in levels:
        if info.moves_per_round:
            ax.plot(range(1, len(info.moves_per_round) + 1), info.moves_per_round,
                    marker="o", label=f"level {info.level} ({info.nodes} nodes)")
    ax.set_xlabel("round")
    ax.set_ylabel("moved nodes")
    ax.set_yscale("symlog")
    if ax.lines:
        ax.legend()
    _save(fig, path)


@_styled
def plot_ari_sweep(rows, path) -> None:
    """ARI with ground truth against mixing; ``rows`` carry mu/algorithm/ari keys."""
    by_algo = defaultdict(lambda: defaultdict(list))
    for r in rows:
        by_algo[r["algorithm"]][float(r["mu"])].append(float(r["ari"]))
    fig = _figure(6.0)
    ax = fig.add_subplot()
    for algo, per_mu in sorted(by_algo.items()):
        mus = sorted(per_mu)
        mean = [np.mean(per_mu[m]) for m in mus]
        std = [np.std(per_mu[m]) for m in mus]
        ax.errorbar(mus, mean, yerr=std, marker="o", capsize=2, label=algo)
    ax.set_xlabel(r"mixing $\mu$")
    ax.set_ylabel("ARI with ground truth")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    _save(fig, path)
