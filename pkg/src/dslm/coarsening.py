"""Distributed contraction of a clustering into a coarser graph, and unpacking.

Node records in graph arrays are tuples ``(v, neighbors, weights, deg, loop)``
and clustering arrays hold ``(v, cluster)`` pairs, both sorted by ``v``.
"""
from __future__ import annotations

from operator import itemgetter
from typing import NamedTuple

import numpy as np

from .dataflow import DistArray, Worker, WorkerPool
from .graph import Graph

__all__ = [
    "Membership",
    "graph_to_dia",
    "dia_to_graph",
    "compact_clusters",
    "contract_dia",
    "unpack_dia",
    "contract",
    "unpack",
]

Membership = list  # contracted node ID -> sorted list of finer node IDs

_first = itemgetter(0)
_second = itemgetter(1)


def _record_size(rec) -> int:
    return 1 + len(rec[1])


def graph_to_dia(worker: Worker, g: Graph) -> DistArray:
    nbrs, wts = g.adjacency
    degs = g.degrees.tolist()
    loops = g.loops.tolist()
    return worker.generate(g.n, lambda v: (v, nbrs[v], wts[v], degs[v], loops[v]))


def dia_to_graph(records: list) -> Graph:
    return Graph.from_adjacency([r[1] for r in records], [r[2] for r in records])


class Compacted(NamedTuple):
    groups: DistArray  # (new cluster ID, [member records])
    count: int


def compact_clusters(graph: DistArray, clust: DistArray, n: int) -> Compacted:
    """Group node records by cluster and renumber non-empty clusters by position."""
    w = graph.worker
    groups = graph.zip(clust).aggregate_to_index(
        key=lambda p: p[1][1], size=n, value=_first,
        size_of=lambda rec: _record_size(rec),
    )
    nonempty = [members for _, members in groups.local if members]
    counts = w.allgather(len(nonempty), "compact")
    offset = sum(counts[: w.rank])
    numbered = DistArray(w, [(offset + j, m) for j, m in enumerate(nonempty)])
    return Compacted(numbered, sum(counts))


def _neighbor_weights(group):
    cu, members = group
    acc: dict[int, float] = {}
    for v, nbrs, wts, _, _ in members:
        for u, x in zip(nbrs, wts):
            # a stored loop appears once but stands for both orientations
            acc[u] = acc.get(u, 0.0) + (x + x if u == v else x)
    return [(cu, u, x) for u, x in acc.items()]


def _merge_record(entry):
    cv, items = entry
    nbrs, wts = [], []
    deg = 0.0
    loop = 0.0
    for cu, x in items:
        deg += x
        if nbrs and nbrs[-1] == cu:
            wts[-1] += x
        else:
            nbrs.append(cu)
            wts.append(x)
    for i, cu in enumerate(nbrs):
        if cu == cv:
            wts[i] *= 0.5
            loop = wts[i]
    return (cv, nbrs, wts, deg, loop)


def contract_dia(compacted: Compacted, n: int):
    """Build the contracted graph, the membership and the renumbered clustering.

    Returns ``(graph, membership, clustering)`` arrays; the graph has one node
    per non-empty cluster and internal weight folded into a loop.
    """
    numbered, k = compacted
    membership = numbered.map(lambda e: (e[0], [rec[0] for rec in e[1]]))
    new_clust = membership.flat_map(lambda e: [(v, e[0]) for v in e[1]]).sort_by_key(_first)
    by_v = numbered.flat_map(_neighbor_weights).aggregate_to_index(key=_second, size=n)
    relabeled = by_v.zip(new_clust).flat_map(
        lambda p: [(p[1][1], cu, x) for cu, _, x in p[0][1]]
    )
    by_cv = relabeled.aggregate_to_index(
        key=_first, size=k, value=lambda t: (t[1], t[2]), sort_key=_first
    )
    return by_cv.map(_merge_record), membership, new_clust


def unpack_dia(coarse: DistArray, membership: DistArray) -> DistArray:
    """Project a coarse clustering onto the finer level's nodes (sorted by node)."""
    return coarse.zip(membership).flat_map(
        lambda p: [(u, p[0][1]) for u in p[1][1]]
    ).sort_by_key(_first)


def contract(g: Graph, c, workers: int = 1) -> tuple[Graph, Membership]:
    """Contract clustering ``c`` of ``g``; empty clusters are dropped.

    >>> from dslm.graph import load_edge_list
    >>> h, mem = contract(load_edge_list("0 1\\n1 2"), [0, 0, 1])
    >>> mem, h.loops.tolist()
    ([[0, 1], [2]], [1.0, 0.0])
    """
    c = np.asarray(c, dtype=np.int64)
    if len(c) != g.n:
        raise ValueError(f"clustering has length {len(c)}, graph has {g.n} nodes")
    if g.n and (c.min() < 0 or c.max() >= g.n):
        raise ValueError("cluster IDs must lie in [0, n)")
    assignment = c.tolist()
    _ = g.adjacency

    def program(worker):
        graph = graph_to_dia(worker, g)
        clust = worker.generate(g.n, lambda v: (v, assignment[v]))
        new_graph, membership, _ = contract_dia(compact_clusters(graph, clust, g.n), g.n)
        return new_graph.gather(), membership.gather()

    records, mem = WorkerPool(workers).run(program)[0]
    return dia_to_graph(records), [m for _, m in mem]


def unpack(coarse, membership: Membership, workers: int = 1) -> np.ndarray:
    """Assign each finer node the coarse cluster of its contracted node."""
    coarse = np.asarray(coarse, dtype=np.int64)
    if len(coarse) != len(membership):
        raise ValueError(f"coarse clustering has {len(coarse)} nodes, membership {len(membership)}")
    finer = sorted(u for m in membership for u in m)
    if finer != list(range(len(finer))):
        raise ValueError("membership does not partition the finer node set 0..N-1")
    values = coarse.tolist()

    def program(worker):
        cl = worker.generate(len(values), lambda x: (x, values[x]))
        mem = worker.generate(len(membership), lambda x: (x, membership[x]))
        return unpack_dia(cl, mem).gather()

    pairs = WorkerPool(workers).run(program)[0]
    return np.array([cx for _, cx in pairs], dtype=np.int64)
