"""Graph representation, edge-list I/O and preprocessing.

Graphs are undirected but stored as symmetric directed adjacency in CSR
form.  A loop ``(v, v, w)`` is stored once in ``v``'s neighbor list and
counts ``2 * w`` towards ``deg(v)``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable

import numpy as np

__all__ = [
    "EdgeListError",
    "NodeRangeError",
    "Graph",
    "NodeMapping",
    "load_edge_list",
    "read_edge_list",
    "write_edge_list",
    "format_edge_list",
    "preprocess",
    "weighted_degree",
    "cluster_stats",
    "normalize_clustering",
    "singleton_clustering",
    "read_clustering",
    "write_clustering",
    "read_mapping",
    "write_mapping",
]

MAX_NODE_ID = 2**31 - 2


class EdgeListError(ValueError):
    """Malformed edge-list or clustering file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NodeRangeError(EdgeListError):
    """Node ID outside the supported range."""


class Graph:
    """Immutable weighted graph in compressed per-node form.

    ``indptr``, ``indices`` and ``weights`` are the usual CSR arrays.  Each
    neighbor list is sorted and free of duplicates.
    """

    def __init__(self, indptr, indices, weights):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.indptr.ndim != 1 or len(self.indptr) == 0:
            raise ValueError("indptr must be a non-empty 1-d array")
        if len(self.indices) != len(self.weights) or self.indptr[-1] != len(self.indices):
            raise ValueError("inconsistent CSR arrays")
        for arr in (self.indptr, self.indices, self.weights):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, n, src, dst, weights=None):
        """Build a graph from undirected edges, symmetrizing and summing multi-edges."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if weights is None:
            weights = np.ones(len(src), dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise NodeRangeError(f"edge endpoint outside [0, {n})")
        off = src != dst
        all_src = np.concatenate([src, dst[off]])
        all_dst = np.concatenate([dst, src[off]])
        all_w = np.concatenate([weights, weights[off]])
        return cls._from_directed(n, all_src, all_dst, all_w)

    @classmethod
    def _from_directed(cls, n, src, dst, weights):
        order = np.lexsort((dst, src))
        src, dst, weights = src[order], dst[order], weights[order]
        if len(src):
            first = np.ones(len(src), dtype=bool)
            first[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
            starts = np.flatnonzero(first)
            weights = np.add.reduceat(weights, starts)
            src, dst = src[starts], dst[starts]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(indptr, dst, weights)

    @classmethod
    def from_adjacency(cls, neighbors, weights):
        """Build from per-node neighbor and weight lists (already symmetric)."""
        n = len(neighbors)
        src = np.repeat(np.arange(n, dtype=np.int64), [len(x) for x in neighbors])
        dst = np.fromiter((u for row in neighbors for u in row), dtype=np.int64, count=len(src))
        w = np.fromiter((x for row in weights for x in row), dtype=np.float64, count=len(src))
        return cls._from_directed(n, src, dst, w)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def num_arcs(self) -> int:
        """Number of stored directed entries (loops count once)."""
        return len(self.indices)

    @cached_property
    def sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))

    @cached_property
    def loops(self) -> np.ndarray:
        """Loop weight per node (0 where there is no loop)."""
        mask = self.sources == self.indices
        return np.bincount(self.sources[mask], weights=self.weights[mask], minlength=self.n)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.sources, weights=self.weights, minlength=self.n) + self.loops

    @cached_property
    def total_volume(self) -> float:
        return math.fsum(self.degrees.tolist())

    @cached_property
    def adjacency(self) -> tuple[list[list[int]], list[list[float]]]:
        """Neighbor and weight lists as plain Python lists (hot-loop friendly)."""
        idx = self.indices.tolist()
        wts = self.weights.tolist()
        bounds = self.indptr.tolist()
        nbrs = [idx[bounds[v]:bounds[v + 1]] for v in range(self.n)]
        ws = [wts[bounds[v]:bounds[v + 1]] for v in range(self.n)]
        return nbrs, ws

    def neighbors(self, v):
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def undirected_edges(self):
        """Yield ``(u, v, w)`` with ``u <= v`` once per undirected edge."""
        src, dst, w = self.sources, self.indices, self.weights
        keep = src <= dst
        return zip(src[keep].tolist(), dst[keep].tolist(), w[keep].tolist())

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    def __repr__(self):
        return f"Graph(n={self.n}, arcs={self.num_arcs}, volume={self.total_volume:g})"


@dataclass(frozen=True)
class NodeMapping:
    """Input ID to preprocessed ID map.  ``old_to_new[x] == -1`` for dropped nodes."""

    old_to_new: np.ndarray
    dropped: frozenset = field(default_factory=frozenset)

    @property
    def new_to_old(self) -> np.ndarray:
        kept = np.flatnonzero(self.old_to_new >= 0)
        out = np.empty(len(kept), dtype=np.int64)
        out[self.old_to_new[kept]] = kept
        return out


def _parse_lines(lines: Iterable[str]):
    src, dst, wts = [], [], []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise EdgeListError(f"expected 'u v' or 'u v w', got {line!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(f"non-integer endpoint in {line!r}", lineno) from None
        if u < 0 or v < 0 or not (parts[0].isdigit() and parts[1].isdigit()):
            raise EdgeListError(f"endpoints must be unsigned integers: {line!r}", lineno)
        if u > MAX_NODE_ID or v > MAX_NODE_ID:
            raise NodeRangeError(f"node id exceeds {MAX_NODE_ID}", lineno)
        w = 1.0
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise EdgeListError(f"bad weight {parts[2]!r}", lineno) from None
            if not math.isfinite(w) or w < 0:
                raise EdgeListError(f"weight must be finite and non-negative: {parts[2]!r}", lineno)
        src.append(u)
        dst.append(v)
        wts.append(w)
    return src, dst, wts


def load_edge_list(stream: IO[str] | str) -> Graph:
    """Parse an edge list from a text stream (or a string).

    >>> load_edge_list("0 1\\n1 2").total_volume
    4.0
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    src, dst, wts = _parse_lines(stream)
    n = max(max(src, default=-1), max(dst, default=-1)) + 1
    return Graph.from_edges(n, src, dst, wts)


def read_edge_list(path) -> Graph:
    with open(path, encoding="ascii") as fh:
        return load_edge_list(fh)


def _fmt_weight(w: float) -> str:
    if w == int(w):
        return str(int(w))
    return format(w, ".17g")


def format_edge_list(g: Graph) -> str:
    out = []
    for u, v, w in g.undirected_edges():
        out.append(f"{u} {v}\n" if w == 1.0 else f"{u} {v} {_fmt_weight(w)}\n")
    return "".join(out)


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_edge_list(g))


def preprocess(g: Graph, seed: int) -> tuple[Graph, NodeMapping]:
    """Drop degree-zero nodes, compact IDs and shuffle node order with ``seed``."""
    keep = np.flatnonzero(g.degrees > 0)
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    perm = rng.permutation(len(keep))
    old_to_new = np.full(g.n, -1, dtype=np.int64)
    old_to_new[keep] = perm
    dropped = frozenset(np.flatnonzero(g.degrees <= 0).tolist())
    src = old_to_new[g.sources]
    dst = old_to_new[g.indices]
    out = Graph._from_directed(len(keep), src, dst, g.weights.copy())
    return out, NodeMapping(old_to_new, dropped)


def weighted_degree(g: Graph, v: int) -> float:
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range [0, {g.n})")
    return float(g.degrees[v])


def _check_clustering(g: Graph, c) -> np.ndarray:
    c = np.asarray(c, dtype=np.int64)
    if c.ndim != 1 or len(c) != g.n:
        raise ValueError(f"clustering has length {len(c)}, graph has {g.n} nodes")
    if len(c) and c.min() < 0:
        raise ValueError("cluster IDs must be non-negative")
    return c


def cluster_stats(g: Graph, c) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster volume and cut, indexed by cluster ID."""
    c = _check_clustering(g, c)
    k = int(c.max()) + 1 if len(c) else 0
    vol = np.bincount(c, weights=g.degrees, minlength=k)
    cs, cd = c[g.sources], c[g.indices]
    leaving = cs != cd
    cut = np.bincount(cs[leaving], weights=g.weights[leaving], minlength=k)
    return vol, cut


def normalize_clustering(c) -> np.ndarray:
    """Relabel cluster IDs to 0..k-1 in order of first appearance."""
    c = np.asarray(c, dtype=np.int64)
    if len(c) == 0:
        return c.copy()
    _, first, inverse = np.unique(c, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse.reshape(-1)]


def singleton_clustering(n: int) -> np.ndarray:
    return np.arange(n, dtype=np.int64)


def _read_pairs(path, what):
    pairs = []
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line[0] in "#%":
                continue
            parts = line.split()
            if len(parts) != 2 or not (parts[0].isdigit() and parts[1].isdigit()):
                raise EdgeListError(f"expected '<id> <id>' in {what} file, got {line!r}", lineno)
            pairs.append((int(parts[0]), int(parts[1])))
    return pairs


def read_clustering(path) -> np.ndarray:
    """Read "nodeId clusterId" lines; node IDs must be exactly 0..n-1."""
    pairs = sorted(_read_pairs(path, "clustering"))
    nodes = [p[0] for p in pairs]
    if nodes != list(range(len(nodes))):
        raise EdgeListError("clustering file must list every node 0..n-1 exactly once")
    return np.array([p[1] for p in pairs], dtype=np.int64)


def write_clustering(c, path) -> None:
    c = np.asarray(c, dtype=np.int64)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("".join(f"{v} {x}\n" for v, x in enumerate(c.tolist())))


def write_mapping(mapping: NodeMapping, path) -> None:
    """Write "old new" lines; a leading comment records the input node count."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# nodes {len(mapping.old_to_new)}\n")
        for old, new in enumerate(mapping.old_to_new.tolist()):
            if new >= 0:
                fh.write(f"{old} {new}\n")


def read_mapping(path) -> NodeMapping:
    pairs = _read_pairs(path, "mapping")
    size = max((p[0] for p in pairs), default=-1) + 1
    with open(path, encoding="ascii") as fh:
        first = fh.readline().split()
    if first[:2] == ["#", "nodes"] and len(first) == 3 and first[2].isdigit():
        size = max(size, int(first[2]))
    old_to_new = np.full(size, -1, dtype=np.int64)
    for old, new in pairs:
        old_to_new[old] = new
    dropped = frozenset(np.flatnonzero(old_to_new < 0).tolist())
    return NodeMapping(old_to_new, dropped)
