"""Modularity and map equation scores, and exact single-move deltas.

Logarithms are base 2.  Move deltas are computed from "rest" statistics of
the source and candidate cluster, i.e. the cluster with ``v`` removed::

    vol(C \\ v), cut(v, C \\ v), cut(C \\ v)

Re-adding ``v`` uses ``cut(C) = cut(C \\ v) + (deg(v) - 2 loop(v)) - 2 cut(v, C \\ v)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph import Graph, cluster_stats

__all__ = [
    "ClusterSummary",
    "RestStats",
    "MoveContext",
    "plogp",
    "modularity",
    "map_equation",
    "modularity_delta",
    "map_equation_delta",
    "move_context",
    "score",
    "MEASURES",
]

MEASURES = ("modularity", "map_equation")


class ClusterSummary(NamedTuple):
    vol: float
    cut: float


class RestStats(NamedTuple):
    """Statistics of a cluster with the moving node removed."""
    vol: float
    cut_to_v: float
    cut: float


@dataclass(frozen=True)
class MoveContext:
    deg_v: float
    loop_v: float
    vol_V: float
    source: RestStats
    candidate: RestStats
    total_cut: float = 0.0


def plogp(x: float) -> float:
    """``x * log2(x)`` with ``plogp(0) == 0``; defined on ``[0, 1]``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"plogp argument {x!r} outside [0, 1]")
    return x * math.log2(x) if x > 0.0 else 0.0


def _plogp(x: float) -> float:
    # tolerant variant for internal sums with rounding noise at the edges
    return x * math.log2(x) if x > 0.0 else 0.0


def _plogp_array(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=np.float64)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def modularity(g: Graph, c) -> float:
    V = g.total_volume
    if V <= 0:
        return 0.0
    vol, cut = cluster_stats(g, c)
    return float(np.sum(vol - cut) / V - np.sum(vol * vol) / (V * V))


def map_equation(g: Graph, c, include_node_term: bool = True) -> float:
    """Two-level map equation codelength in bits.

    With ``include_node_term=False`` the clustering-independent node-entropy
    term is dropped, which is the form the optimizers work with.
    """
    V = g.total_volume
    if V <= 0:
        return 0.0
    vol, cut = cluster_stats(g, c)
    q = cut / V
    L = (_plogp(float(np.sum(q)))
         - 2.0 * float(np.sum(_plogp_array(q)))
         + float(np.sum(_plogp_array((cut + vol) / V))))
    if include_node_term:
        L -= float(np.sum(_plogp_array(g.degrees / V)))
    return L


def score(measure: str, g: Graph, c, include_node_term: bool = True) -> float:
    if measure == "modularity":
        return modularity(g, c)
    if measure == "map_equation":
        return map_equation(g, c, include_node_term)
    raise ValueError(f"unknown measure {measure!r}")


def _mod_delta(deg, V, vol_s, cutv_s, vol_d, cutv_d):
    return 2.0 * (cutv_d - cutv_s) / V - 2.0 * deg * (vol_d - vol_s) / (V * V)


def _map_delta(deg, loop, V, T, vol_s, cutv_s, cut_s, vol_d, cutv_d, cut_d):
    if vol_s == vol_d and cutv_s == cutv_d and cut_s == cut_d:
        return 0.0
    free = deg - 2.0 * loop
    cut_s_with = cut_s + free - 2.0 * cutv_s
    cut_d_with = cut_d + free - 2.0 * cutv_d
    T_after = T - cut_s_with - cut_d + cut_s + cut_d_with
    d = _plogp(T_after / V) - _plogp(T / V)
    d -= 2.0 * (_plogp(cut_s / V) + _plogp(cut_d_with / V)
                - _plogp(cut_s_with / V) - _plogp(cut_d / V))
    d += (_plogp((cut_s + vol_s) / V) + _plogp((cut_d_with + vol_d + deg) / V)
          - _plogp((cut_s_with + vol_s + deg) / V) - _plogp((cut_d + vol_d) / V))
    return d


def modularity_delta(ctx: MoveContext) -> float:
    """Change in modularity when the node leaves its cluster for the candidate."""
    s, d = ctx.source, ctx.candidate
    return _mod_delta(ctx.deg_v, ctx.vol_V, s.vol, s.cut_to_v, d.vol, d.cut_to_v)


def map_equation_delta(ctx: MoveContext) -> float:
    """Change in map equation (negative is better); needs ``ctx.total_cut``."""
    s, d = ctx.source, ctx.candidate
    return _map_delta(ctx.deg_v, ctx.loop_v, ctx.vol_V, ctx.total_cut,
                      s.vol, s.cut_to_v, s.cut, d.vol, d.cut_to_v, d.cut)


def _rest_stats(g: Graph, c: np.ndarray, v: int, cluster: int, vol, cut) -> RestStats:
    nbrs, wts = g.neighbors(v)
    mask = (c[nbrs] == cluster) & (nbrs != v)
    cut_to_v = float(np.sum(wts[mask]))
    if c[v] != cluster:
        return RestStats(float(vol[cluster]), cut_to_v, float(cut[cluster]))
    deg, loop = float(g.degrees[v]), float(g.loops[v])
    return RestStats(float(vol[cluster]) - deg, cut_to_v,
                     float(cut[cluster]) - (deg - 2.0 * loop) + 2.0 * cut_to_v)


def move_context(g: Graph, c, v: int, target: int) -> MoveContext:
    """Build the context for moving ``v`` into cluster ``target`` from scratch."""
    c = np.asarray(c, dtype=np.int64)
    k = max(int(c.max()), target) + 1
    vol, cut = cluster_stats(g, c)
    vol = np.pad(vol, (0, k - len(vol)))
    cut = np.pad(cut, (0, k - len(cut)))
    return MoveContext(
        deg_v=float(g.degrees[v]),
        loop_v=float(g.loops[v]),
        vol_V=g.total_volume,
        source=_rest_stats(g, c, v, int(c[v]), vol, cut),
        candidate=_rest_stats(g, c, v, target, vol, cut),
        total_cut=float(np.sum(cut)),
    )
