"""Distributed synchronous local moving (DSLM) and the multi-level driver.

One round is split into ``sub_rounds`` sub-rounds.  A global hash assigns
every node to the sub-round in which it is active.  A sub-round is

* bidding: group node records by cluster; every cluster emits a bid
  ``(C, v, vol(C\\v), cut(v, C\\v), cut(C\\v))`` for each active node in or
  next to it;
* compare: group bids by node, join with degrees, and let every active node
  join its best cluster if that strictly improves the score.

All active nodes of a sub-round move simultaneously against the clustering
produced by the previous sub-round.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from operator import itemgetter
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .coarsening import compact_clusters, contract_dia, graph_to_dia, unpack_dia
from .dataflow import DistArray, Worker, WorkerPool, block_range, mix64
from .graph import Graph, normalize_clustering
from .quality import _map_delta, _mod_delta

__all__ = [
    "Bid",
    "DslmConfig",
    "LevelInfo",
    "DslmRun",
    "subround_of",
    "subround_array",
    "bidding_step",
    "compare_step",
    "local_moving_phase",
    "run_dslm",
    "run_dslm_detailed",
]

log = logging.getLogger("dslm")

_first = itemgetter(0)


class Bid(NamedTuple):
    cluster: int
    node: int
    vol_rest: float
    cut_to_v: float
    cut_rest: float | None


@dataclass(frozen=True)
class DslmConfig:
    measure: str = "modularity"
    sub_rounds: int = 4
    max_rounds: int = 8
    contract: bool = True
    seed: int = 0
    workers: int = 1
    fast_path: bool = True
    epsilon: float = 1e-12
    group_budget: int | None = None

    def __post_init__(self):
        if self.measure not in ("modularity", "map_equation"):
            raise ValueError(f"unknown measure {self.measure!r}")
        if self.sub_rounds < 1 or self.max_rounds < 1 or self.workers < 1:
            raise ValueError("sub_rounds, max_rounds and workers must be positive")


@dataclass
class LevelInfo:
    level: int
    nodes: int
    arcs: int
    moves_per_round: list[int] = field(default_factory=list)
    clusters: int = 0


@dataclass
class DslmRun:
    clustering: np.ndarray
    levels: list[LevelInfo]


# -- hashing -------------------------------------------------------------

_M = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix_np(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def subround_of(v: int, round_: int, seed: int, k: int) -> int:
    """Sub-round in ``[0, k)`` in which node ``v`` is active during ``round_``."""
    return mix64(v, round_, seed) % k


def subround_array(n: int, round_: int, seed: int, k: int) -> np.ndarray:
    """Vectorized :func:`subround_of` for nodes ``0..n-1``."""
    with np.errstate(over="ignore"):
        h = _splitmix_np(np.arange(n, dtype=np.uint64))
        h = _splitmix_np(h ^ np.uint64(round_ & 0xFFFFFFFFFFFFFFFF))
        h = _splitmix_np(h ^ np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    return (h % np.uint64(k)).astype(np.int64)


# -- bidding -------------------------------------------------------------

def _cluster_bids(cluster: int, members: list, active: Sequence[bool], with_cut_rest: bool,
                  tag_members: bool = False):
    """Compute vol/cut of one cluster group and its bids for active nodes."""
    member_set = {rec[0] for rec in members}
    vol = 0.0
    cut = 0.0
    acc: dict[int, float] = {}
    for v, nbrs, wts, deg, _ in members:
        vol += deg
        for u, x in zip(nbrs, wts):
            if u not in member_set:
                cut += x
            if u != v and active[u]:
                acc[u] = acc.get(u, 0.0) + x
    bids = []
    for v, _, _, deg, loop in members:
        if active[v]:
            cv = acc.pop(v, 0.0)
            rest = cut - (deg - 2.0 * loop) + 2.0 * cv if with_cut_rest else None
            bid = Bid(cluster, v, vol - deg, cv, rest)
            bids.append((bid, True) if tag_members else bid)
    for u, cu in acc.items():
        bid = Bid(cluster, u, vol, cu, cut if with_cut_rest else None)
        bids.append((bid, False) if tag_members else bid)
    return cut, bids


def _bidding(graph: DistArray, clust: DistArray, n: int, active, with_cut_rest: bool,
             tag_members: bool = False):
    groups = graph.zip(clust).aggregate_to_index(
        key=lambda p: p[1][1], size=n, value=_first,
        size_of=lambda rec: 1 + len(rec[1]),
    )
    summaries = groups.map(
        lambda kg: _cluster_bids(kg[0], kg[1], active, with_cut_rest, tag_members)
        if kg[1] else (0.0, [])
    )
    return summaries.flat_map(lambda s: s[1]), summaries


# -- compare -------------------------------------------------------------

class _Selector:
    """Best-candidate rule shared by the reference and the fast compare path.

    Candidates are ranked by a measure-specific key (higher is better); exact
    key ties go to the smallest tie hash, then the smallest cluster ID.
    """

    def __init__(self, measure: str, V: float, seed: int, level: int, round_: int, sub: int,
                 epsilon: float):
        self.modularity = measure == "modularity"
        self.V = V
        self.salt = (seed, level, round_, sub)
        self.epsilon = epsilon

    def tie(self, v: int, cluster: int) -> int:
        return mix64(*self.salt, v, cluster)

    def key(self, deg, loop, T, own: Bid, b: Bid) -> float:
        if self.modularity:
            return b.cut_to_v - deg * b.vol_rest / self.V
        return -_map_delta(deg, loop, self.V, T, own.vol_rest, own.cut_to_v, own.cut_rest,
                           b.vol_rest, b.cut_to_v, b.cut_rest)

    def better(self, v, key_a, a: Bid, key_b, b: Bid) -> bool:
        """True if candidate ``a`` beats candidate ``b``."""
        if key_a != key_b:
            return key_a > key_b
        ta, tb = self.tie(v, a.cluster), self.tie(v, b.cluster)
        if ta != tb:
            return ta < tb
        return a.cluster < b.cluster

    def gain(self, deg, loop, T, own: Bid, best: Bid, best_key: float) -> float:
        if self.modularity:
            return _mod_delta(deg, self.V, own.vol_rest, own.cut_to_v, best.vol_rest, best.cut_to_v)
        return best_key

    def decide(self, v, deg, loop, T, own: Bid, best: Bid, best_key: float) -> int:
        if best.cluster == own.cluster:
            return own.cluster
        if self.gain(deg, loop, T, own, best, best_key) > self.epsilon:
            return best.cluster
        return own.cluster


def _compare_reference(graph, clust, bids, n, active, sel: _Selector, T: float):
    by_node = bids.aggregate_to_index(key=lambda b: b.node, size=n, sort_key=lambda b: b.cluster)

    def select(p):
        ((v, group), rec), (_, current) = p
        if not active[v]:
            return (v, current)
        deg, loop = rec[3], rec[4]
        own = next((b for b in group if b.cluster == current), None)
        if own is None:
            raise RuntimeError(f"active node {v} has no bid from its own cluster {current}")
        best, best_key = None, 0.0
        for b in group:
            k = sel.key(deg, loop, T, own, b)
            if best is None or sel.better(v, k, b, best_key, best):
                best, best_key = b, k
        return (v, sel.decide(v, deg, loop, T, own, best, best_key))

    return by_node.zip(graph).zip(clust).map(select)


def _compare_fast(graph, clust, tagged_bids, n, active, sel: _Selector):
    """Modularity compare with a streaming pairwise reduction per node."""
    w = graph.worker
    lo, _ = block_range(w.rank, n, w.size)
    if graph.local and graph.local[0][0] != lo:
        raise RuntimeError("graph partition is not aligned with node-index placement")
    degs = [rec[3] for rec in graph.local]

    def combine(v, acc, item):
        bid, is_member = item
        k = bid.cut_to_v - degs[v - lo] * bid.vol_rest / sel.V
        if acc is None:
            return (bid if is_member else None, bid, k)
        own, best, best_key = acc
        if is_member:
            own = bid
        if sel.better(v, k, bid, best_key, best):
            best, best_key = bid, k
        return (own, best, best_key)

    reduced = tagged_bids.aggregate_to_index(key=lambda t: t[0].node, size=n, combiner=combine)

    def select(p):
        (v, acc), (_, current) = p
        if not active[v]:
            return (v, current)
        own, best, best_key = acc
        if own is None:
            raise RuntimeError(f"active node {v} has no bid from its own cluster {current}")
        return (v, sel.decide(v, degs[v - lo], 0.0, 0.0, own, best, best_key))

    return reduced.zip(clust).map(select)


def _subround(worker: Worker, graph, clust, n, V, cfg: DslmConfig, active, level, round_, sub,
              with_cut_rest=None):
    sel = _Selector(cfg.measure, V, cfg.seed, level, round_, sub, cfg.epsilon)
    use_fast = cfg.fast_path and cfg.measure == "modularity"
    if use_fast:
        bids, _ = _bidding(graph, clust, n, active, with_cut_rest=False, tag_members=True)
        new = _compare_fast(graph, clust, bids, n, active, sel)
    else:
        if with_cut_rest is None:
            with_cut_rest = cfg.measure == "map_equation"
        bids, summaries = _bidding(graph, clust, n, active, with_cut_rest)
        T = summaries.all_reduce_sum(_first) if cfg.measure == "map_equation" else 0.0
        new = _compare_reference(graph, clust, bids, n, active, sel, T)
    moved = sum(1 for (_, a), (_, b) in zip(clust.local, new.local) if a != b)
    return new, worker.all_reduce(moved)


def _local_moving(worker: Worker, graph, clust, n, V, cfg: DslmConfig, level: int,
                  with_cut_rest=None, trace: Callable | None = None):
    moves: list[int] = []
    if V <= 0:
        # no edges, so no move can gain; this counts as one empty round
        return clust, [0]
    level_seed = mix64(cfg.seed, level)
    for rnd in range(cfg.max_rounds):
        sub_of = subround_array(n, rnd, level_seed, cfg.sub_rounds).tolist()
        present = set(sub_of)
        moved_round = 0
        for i in range(cfg.sub_rounds):
            if i not in present:
                continue
            active = [s == i for s in sub_of]
            clust, moved = _subround(worker, graph, clust, n, V, cfg, active, level, rnd, i,
                                     with_cut_rest)
            moved_round += moved
            if trace is not None:
                trace(worker, level, rnd, i, clust)
        moves.append(moved_round)
        if worker.rank == 0:
            log.info("level %d round %d: %d moves", level, rnd, moved_round)
        if moved_round == 0:
            break
    return clust, moves


def _program(worker: Worker, g: Graph, cfg: DslmConfig, with_cut_rest=None):
    graph = graph_to_dia(worker, g)
    n, V = g.n, g.total_volume
    arcs = g.num_arcs
    stack = []
    levels: list[LevelInfo] = []
    level = 0
    while True:
        clust = worker.generate(n, lambda v: (v, v))
        info = LevelInfo(level, n, arcs)
        levels.append(info)
        if worker.rank == 0:
            log.info("level %d: %d nodes, %d arcs", level, n, arcs)
        clust, info.moves_per_round = _local_moving(worker, graph, clust, n, V, cfg, level,
                                                   with_cut_rest)
        if not cfg.contract:
            info.clusters = worker.all_reduce({c for _, c in clust.local}, op=_count_union)
            break
        compacted = compact_clusters(graph, clust, n)
        info.clusters = compacted.count
        if compacted.count == n:
            break
        graph, membership, _ = contract_dia(compacted, n)
        stack.append(membership)
        n = compacted.count
        arcs = worker.all_reduce(sum(len(r[1]) for r in graph.local))
        level += 1
    final = clust
    for membership in reversed(stack):
        final = unpack_dia(final, membership)
    return [c for _, c in final.gather()], levels


def _count_union(parts):
    return len(set().union(*parts)) if parts else 0


def run_dslm_detailed(g: Graph, cfg: DslmConfig, with_cut_rest: bool | None = None) -> DslmRun:
    """Run DSLM and return the clustering together with per-level statistics."""
    _ = g.adjacency
    pool = WorkerPool(cfg.workers, seed=cfg.seed, group_budget=cfg.group_budget)
    assignment, levels = pool.run(_program, g, cfg, with_cut_rest)[0]
    return DslmRun(normalize_clustering(np.array(assignment, dtype=np.int64)), levels)


def run_dslm(g: Graph, cfg: DslmConfig) -> np.ndarray:
    """Multi-level DSLM; returns a normalized clustering of ``g``'s nodes."""
    return run_dslm_detailed(g, cfg).clustering


# -- single-step entry points (mainly for testing) -----------------------

def _active_list(n: int, active) -> list[bool]:
    if callable(active):
        return [bool(active(v)) for v in range(n)]
    active = [bool(a) for a in active]
    if len(active) != n:
        raise ValueError("activity mask must have one entry per node")
    return active


def bidding_step(g: Graph, c, active, workers: int = 1, with_cut_rest: bool = True) -> list[Bid]:
    """All bids for clustering ``c``, sorted by (node, cluster)."""
    assignment = np.asarray(c, dtype=np.int64).tolist()
    act = _active_list(g.n, active)
    _ = g.adjacency

    def program(worker):
        graph = graph_to_dia(worker, g)
        clust = worker.generate(g.n, lambda v: (v, assignment[v]))
        bids, _ = _bidding(graph, clust, g.n, act, with_cut_rest)
        return bids.sort_by_key(lambda b: (b.node, b.cluster)).gather()

    return WorkerPool(workers).run(program)[0]


def compare_step(g: Graph, c, bids: list[Bid], active, total_cut: float = 0.0,
                 measure: str = "modularity", seed: int = 0, workers: int = 1,
                 level: int = 0, round_: int = 0, sub_round: int = 0,
                 epsilon: float = 1e-12) -> np.ndarray:
    """Apply one reference compare step to explicit bids; returns the new clustering."""
    assignment = np.asarray(c, dtype=np.int64).tolist()
    act = _active_list(g.n, active)
    V = g.total_volume
    _ = g.adjacency

    def program(worker):
        graph = graph_to_dia(worker, g)
        clust = worker.generate(g.n, lambda v: (v, assignment[v]))
        mine = worker.distribute(bids)
        sel = _Selector(measure, V, seed, level, round_, sub_round, epsilon)
        return _compare_reference(graph, clust, mine, g.n, act, sel, total_cut).gather()

    return np.array([x for _, x in WorkerPool(workers).run(program)[0]], dtype=np.int64)


def local_moving_phase(g: Graph, c0, cfg: DslmConfig, level: int = 0,
                       with_cut_rest: bool | None = None,
                       trace: Callable | None = None) -> tuple[np.ndarray, list[int]]:
    """One local moving phase from ``c0``; returns the clustering and per-round move counts.

    ``trace(clustering)`` is called on the root worker after each sub-round.
    """
    assignment = np.asarray(c0, dtype=np.int64).tolist()
    V = g.total_volume
    _ = g.adjacency

    def hook(worker, lvl, rnd, sub, clust):
        snap = clust.gather()
        if trace is not None and worker.rank == 0:
            trace(np.array([x for _, x in snap], dtype=np.int64))

    def program(worker):
        graph = graph_to_dia(worker, g)
        clust = worker.generate(g.n, lambda v: (v, assignment[v]))
        out, moves = _local_moving(worker, graph, clust, g.n, V, cfg, level, with_cut_rest,
                                   hook if trace is not None else None)
        return [x for _, x in out.gather()], moves

    pool = WorkerPool(cfg.workers, seed=cfg.seed, group_budget=cfg.group_budget)
    result, moves = pool.run(program)[0]
    return np.array(result, dtype=np.int64), moves
