"""Clustering comparison, score reports and planted-partition benchmarks."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .graph import Graph, normalize_clustering
from .quality import map_equation, modularity

__all__ = [
    "ContingencyTable",
    "contingency_table",
    "ari",
    "PlantedPartitionSpec",
    "generate_planted_partition",
    "expected_mixing",
    "p_out_for_mixing",
    "mixing",
    "Report",
    "report",
    "connected_components",
    "remap_clustering",
]


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray  # counts[i, j] = |X_i ∩ Y_j|
    rows: np.ndarray
    cols: np.ndarray
    n: int


def contingency_table(x, y) -> ContingencyTable:
    x = normalize_clustering(x)
    y = normalize_clustering(y)
    if len(x) != len(y):
        raise ValueError(f"clusterings cover {len(x)} and {len(y)} nodes")
    kx = int(x.max()) + 1 if len(x) else 0
    ky = int(y.max()) + 1 if len(y) else 0
    counts = np.zeros((kx, ky), dtype=np.int64)
    np.add.at(counts, (x, y), 1)
    return ContingencyTable(counts, counts.sum(axis=1), counts.sum(axis=0), len(x))


def _pairs(a: np.ndarray) -> float:
    a = a.astype(np.float64)
    return float(np.sum(a * (a - 1.0) / 2.0))


def ari(x, y) -> float:
    """Adjusted rand index of two clusterings of the same nodes.

    Returns 1.0 when the expected-index correction is degenerate (both
    clusterings trivial), matching the usual convention.
    """
    t = contingency_table(x, y)
    if t.n < 2:
        return 1.0
    index = _pairs(t.counts)
    a, b = _pairs(t.rows), _pairs(t.cols)
    expected = a * b / (t.n * (t.n - 1) / 2.0)
    maximum = 0.5 * (a + b)
    if maximum == expected:
        return 1.0
    return (index - expected) / (maximum - expected)


@dataclass(frozen=True)
class PlantedPartitionSpec:
    n: int
    clusters: int
    p_in: float
    p_out: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 0 or self.clusters < 1 or self.clusters > max(self.n, 1):
            raise ValueError("need 1 <= clusters <= n")
        if not 0.0 <= self.p_out < self.p_in <= 1.0:
            raise ValueError("need 0 <= p_out < p_in <= 1")

    def sizes(self) -> np.ndarray:
        base, extra = divmod(self.n, self.clusters)
        return np.array([base + (i < extra) for i in range(self.clusters)], dtype=np.int64)

    def truth(self) -> np.ndarray:
        return np.repeat(np.arange(self.clusters, dtype=np.int64), self.sizes())


def _pair_counts(spec: PlantedPartitionSpec) -> tuple[float, float]:
    s = spec.sizes().astype(np.float64)
    intra = float(np.sum(s * (s - 1) / 2))
    return intra, spec.n * (spec.n - 1) / 2 - intra


def expected_mixing(spec: PlantedPartitionSpec) -> float:
    """Expected fraction of inter-cluster edges."""
    intra, inter = _pair_counts(spec)
    e_in, e_out = spec.p_in * intra, spec.p_out * inter
    return e_out / (e_in + e_out) if e_in + e_out else 0.0


def p_out_for_mixing(n: int, clusters: int, p_in: float, mu: float) -> float:
    """Inter-cluster probability giving expected mixing ``mu`` for a given ``p_in``."""
    intra, inter = _pair_counts(PlantedPartitionSpec(n, clusters, p_in, 0.0))
    return mu / (1.0 - mu) * p_in * intra / inter


def _bernoulli_pairs(rng, truth, p_in, p_out):
    n = len(truth)
    src, dst = [], []
    for i in range(n - 1):
        j = np.arange(i + 1, n)
        p = np.where(truth[j] == truth[i], p_in, p_out)
        hit = j[rng.random(n - i - 1) < p]
        src.append(np.full(len(hit), i, dtype=np.int64))
        dst.append(hit)
    if not src:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(src), np.concatenate(dst)


def _geometric_positions(rng, count: int, p: float) -> np.ndarray:
    """Indices in ``[0, count)`` selected independently with probability ``p``."""
    if p <= 0.0 or count <= 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(count, dtype=np.int64)
    out = []
    pos = -1
    chunk = max(16, int(count * p * 1.1) + 16)
    while True:
        steps = rng.geometric(p, size=chunk)
        idx = pos + np.cumsum(steps)
        keep = idx[idx < count]
        out.append(keep)
        if len(keep) < len(idx):
            break
        pos = int(idx[-1])
    return np.concatenate(out)


def _skipping_pairs(rng, sizes, p_in, p_out):
    starts = np.concatenate([[0], np.cumsum(sizes)])
    src, dst = [], []
    k = len(sizes)
    for a in range(k):
        sa = int(sizes[a])
        # upper triangle of the diagonal block, row-major
        pos = _geometric_positions(rng, sa * (sa - 1) // 2, p_in)
        if len(pos):
            i = (sa - 2 - np.floor(np.sqrt(-8.0 * pos + 4.0 * sa * (sa - 1) - 7) / 2.0 - 0.5)).astype(np.int64)
            j = pos + i + 1 - sa * (sa - 1) // 2 + (sa - i) * ((sa - i) - 1) // 2
            src.append(starts[a] + i)
            dst.append(starts[a] + j)
        for b in range(a + 1, k):
            sb = int(sizes[b])
            pos = _geometric_positions(rng, sa * sb, p_out)
            src.append(starts[a] + pos // sb)
            dst.append(starts[b] + pos % sb)
    if not src:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(src).astype(np.int64), np.concatenate(dst).astype(np.int64)


def generate_planted_partition(spec: PlantedPartitionSpec, method: str | None = None):
    """Sample a planted-partition graph; returns ``(graph, ground_truth)``.

    Clusters are contiguous node ranges of near-equal size.  Pairs are
    sampled one by one up to 10^4 nodes and by geometric skipping above;
    ``method`` ("pairs" or "skip") overrides the choice.
    """
    rng = np.random.default_rng(spec.seed & 0xFFFFFFFFFFFFFFFF)
    truth = spec.truth()
    if method is None:
        method = "pairs" if spec.n <= 10_000 else "skip"
    if method == "pairs":
        src, dst = _bernoulli_pairs(rng, truth, spec.p_in, spec.p_out)
    elif method == "skip":
        src, dst = _skipping_pairs(rng, spec.sizes(), spec.p_in, spec.p_out)
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    return Graph.from_edges(spec.n, src, dst), truth


def mixing(g: Graph, truth) -> float:
    """Measured fraction of edge weight running between different clusters."""
    truth = np.asarray(truth)
    if g.total_volume <= 0:
        return 0.0
    leaving = truth[g.sources] != truth[g.indices]
    return float(np.sum(g.weights[leaving]) / g.total_volume)


def connected_components(g: Graph) -> np.ndarray:
    label = np.full(g.n, -1, dtype=np.int64)
    nbrs, _ = g.adjacency
    current = 0
    for s in range(g.n):
        if label[s] >= 0:
            continue
        label[s] = current
        stack = [s]
        while stack:
            v = stack.pop()
            for u in nbrs[v]:
                if label[u] < 0:
                    label[u] = current
                    stack.append(u)
        current += 1
    return label


@dataclass(frozen=True)
class Report:
    modularity: float
    map_equation: float
    clusters: int
    size_min: int
    size_max: int
    size_mean: float
    size_median: float

    def as_dict(self) -> dict:
        return asdict(self)

    def to_tsv(self) -> str:
        return "".join(f"{k}\t{_fmt(v)}\n" for k, v in asdict(self).items())


def _fmt(v) -> str:
    return f"{v:.9f}" if isinstance(v, float) else str(v)


def report(g: Graph, c) -> Report:
    c = np.asarray(c, dtype=np.int64)
    sizes = np.bincount(normalize_clustering(c)) if len(c) else np.zeros(0, dtype=np.int64)
    return Report(
        modularity=modularity(g, c),
        map_equation=map_equation(g, c, include_node_term=True),
        clusters=len(sizes),
        size_min=int(sizes.min()) if len(sizes) else 0,
        size_max=int(sizes.max()) if len(sizes) else 0,
        size_mean=float(sizes.mean()) if len(sizes) else 0.0,
        size_median=float(np.median(sizes)) if len(sizes) else 0.0,
    )


def remap_clustering(c, mapping) -> np.ndarray:
    """Carry a clustering of input IDs over to preprocessed IDs (dropped nodes vanish)."""
    c = np.asarray(c, dtype=np.int64)
    o2n = mapping.old_to_new
    if len(c) < len(o2n):
        raise ValueError(f"clustering covers {len(c)} nodes, mapping expects {len(o2n)}")
    kept = np.flatnonzero(o2n >= 0)
    out = np.empty(len(kept), dtype=np.int64)
    out[o2n[kept]] = c[kept]
    return out
