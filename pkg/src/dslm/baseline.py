"""Sequential Louvain-style local moving and an exhaustive optimum for tiny graphs."""
from __future__ import annotations

from typing import Callable, Iterator

import numpy as np

from .coarsening import contract, unpack
from .engine import Bid, DslmConfig, _Selector
from .graph import Graph, normalize_clustering
from .quality import score

__all__ = ["sequential_local_moving", "sequential_phase", "brute_force_best", "set_partitions"]

BRUTE_FORCE_LIMIT = 10


def sequential_phase(g: Graph, cfg: DslmConfig, level: int = 0,
                     on_move: Callable | None = None) -> tuple[np.ndarray, list[int]]:
    """One local moving phase from singletons, moving one node at a time.

    ``on_move(assignment)`` receives the current level's clustering after
    every accepted move.
    """
    n = g.n
    V = g.total_volume
    nbrs, wts = g.adjacency
    deg = g.degrees.tolist()
    loop = g.loops.tolist()
    c = list(range(n))
    vol = deg[:]
    cut = [deg[v] - 2.0 * loop[v] for v in range(n)]
    T = sum(cut)
    moves: list[int] = []
    if V <= 0:
        return np.array(c, dtype=np.int64), [0]
    for rnd in range(cfg.max_rounds):
        sel = _Selector(cfg.measure, V, cfg.seed, level, rnd, 0, cfg.epsilon)
        order = np.random.default_rng([cfg.seed & 0xFFFFFFFFFFFFFFFF, level, rnd]).permutation(n)
        moved = 0
        for v in order.tolist():
            S = c[v]
            w_to: dict[int, float] = {}
            for u, x in zip(nbrs[v], wts[v]):
                if u != v:
                    w_to[c[u]] = w_to.get(c[u], 0.0) + x
            free = deg[v] - 2.0 * loop[v]
            cv_s = w_to.pop(S, 0.0)
            own = Bid(S, v, vol[S] - deg[v], cv_s, cut[S] - free + 2.0 * cv_s)
            best, best_key = own, sel.key(deg[v], loop[v], T, own, own)
            for D, cv_d in w_to.items():
                b = Bid(D, v, vol[D], cv_d, cut[D])
                k = sel.key(deg[v], loop[v], T, own, b)
                if sel.better(v, k, b, best_key, best):
                    best, best_key = b, k
            D = sel.decide(v, deg[v], loop[v], T, own, best, best_key)
            if D == S:
                continue
            cut_d_with = best.cut_rest + free - 2.0 * best.cut_to_v
            T += own.cut_rest - cut[S] + cut_d_with - cut[D]
            cut[S], cut[D] = own.cut_rest, cut_d_with
            vol[S] -= deg[v]
            vol[D] += deg[v]
            c[v] = D
            moved += 1
            if on_move is not None:
                on_move(np.array(c, dtype=np.int64))
        moves.append(moved)
        if moved == 0:
            break
    return np.array(c, dtype=np.int64), moves


def sequential_local_moving(g: Graph, cfg: DslmConfig,
                            on_move: Callable | None = None) -> np.ndarray:
    """Multi-level sequential Louvain for the configured measure.

    ``on_move(graph, assignment)`` is called after each accepted move with the
    current level's graph and clustering.
    """
    stack = []
    level = 0
    graph = g
    while True:
        hook = None if on_move is None else (lambda a, _g=graph: on_move(_g, a))
        c, _ = sequential_phase(graph, cfg, level, hook)
        if not cfg.contract:
            break
        if len(set(c.tolist())) == graph.n:
            break
        graph, membership = contract(graph, c)
        stack.append(membership)
        level += 1
    final = c
    for membership in reversed(stack):
        final = unpack(final, membership)
    return normalize_clustering(final)


def set_partitions(n: int) -> Iterator[list[int]]:
    """All set partitions of ``range(n)`` as restricted growth strings."""
    if n == 0:
        yield []
        return
    a = [0] * n
    m = [0] * n  # m[i] = max(a[:i+1])

    def rec(i):
        if i == n:
            yield list(a)
            return
        for x in range(m[i - 1] + 2):
            a[i] = x
            m[i] = max(m[i - 1], x)
            yield from rec(i + 1)

    yield from rec(1)


def brute_force_best(g: Graph, measure: str) -> tuple[np.ndarray, float]:
    """Exact optimum over every partition (maximum modularity / minimum map equation)."""
    if g.n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} nodes, got {g.n}")
    sign = 1.0 if measure == "modularity" else -1.0
    best, best_score = None, None
    for part in set_partitions(g.n):
        s = score(measure, g, part)
        if best is None or sign * s > sign * best_score + 1e-12:
            best, best_score = part, s
    return np.array(best, dtype=np.int64), float(best_score)
