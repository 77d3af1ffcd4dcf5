import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from dslm.evaluation import (
    PlantedPartitionSpec,
    ari,
    connected_components,
    contingency_table,
    expected_mixing,
    generate_planted_partition,
    mixing,
    p_out_for_mixing,
    remap_clustering,
    report,
)
from dslm.graph import preprocess

AB = oracles.BARBELL6_AB


def test_ari_examples(frozen):
    f = frozen["ari_six_node"]
    assert ari(f["x"], f["y"]) == pytest.approx(f["sklearn"], abs=1e-12)
    assert ari(f["x"], f["y"]) == pytest.approx(0.324324324, abs=1e-9)
    assert f["sklearn"] == pytest.approx(f["pairs"], abs=1e-12)
    t = contingency_table(f["x"], f["y"])
    assert t.counts.tolist() == [[3, 0], [1, 2]]
    assert t.rows.tolist() == [3, 3] and t.cols.tolist() == [4, 2] and t.n == 6


def test_ari_identity_and_relabel():
    x = [0, 0, 1, 2, 2, 2, 3]
    assert ari(x, x) == 1
    assert ari(x, [9, 9, 4, 7, 7, 7, 1]) == 1
    assert ari([0] * 5, [0] * 5) == 1
    assert ari([0], [3]) == 1
    with pytest.raises(ValueError):
        ari([0, 1], [0, 1, 2])


def test_ari_can_be_negative():
    assert ari([0, 0, 1, 1], [0, 1, 0, 1]) < 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=2, max_size=60))
def test_ari_matches_oracles(pairs):
    x, y = zip(*pairs)
    a = ari(x, y)
    assert a == pytest.approx(oracles.ari_oracle(x, y), abs=1e-12)
    assert a == pytest.approx(ari(y, x), abs=1e-15)
    if len(x) <= 25:
        assert a == pytest.approx(oracles.ari_by_pairs(x, y), abs=1e-12)


def test_ari_random_baseline():
    rng = np.random.default_rng(42)
    x = np.repeat(np.arange(10), 30)
    vals = [ari(x, rng.permutation(x)) for _ in range(100)]
    assert -0.05 <= float(np.mean(vals)) <= 0.05


# -- generator -----------------------------------------------------------

def test_spec_validation():
    with pytest.raises(ValueError):
        PlantedPartitionSpec(10, 2, 0.1, 0.2)
    with pytest.raises(ValueError):
        PlantedPartitionSpec(10, 0, 0.5, 0.1)
    with pytest.raises(ValueError):
        PlantedPartitionSpec(10, 11, 0.5, 0.1)
    assert PlantedPartitionSpec(10, 3, 0.5, 0.1).sizes().tolist() == [4, 3, 3]


@pytest.mark.parametrize("method", ["pairs", "skip"])
def test_disjoint_cliques(method):
    spec = PlantedPartitionSpec(23, 4, 1.0, 0.0, seed=3)
    g, truth = generate_planted_partition(spec, method)
    sizes = spec.sizes()
    assert g.num_arcs == int(np.sum(sizes * (sizes - 1)))
    assert ari(connected_components(g), truth) == 1
    assert all(truth[u] == truth[v] for u, v, _ in g.undirected_edges())


@pytest.mark.parametrize("method", ["pairs", "skip"])
def test_generator_reproducible(method):
    spec = PlantedPartitionSpec(300, 6, 0.3, 0.02, seed=11)
    a, ta = generate_planted_partition(spec, method)
    b, tb = generate_planted_partition(spec, method)
    assert a == b and np.array_equal(ta, tb)
    c, _ = generate_planted_partition(PlantedPartitionSpec(300, 6, 0.3, 0.02, seed=12), method)
    assert a != c


@pytest.mark.parametrize("n, k", [(57, 5), (9, 5), (130, 3), (4, 4)])
def test_skip_indexing_enumerates_every_pair(n, k):
    """With p_in = 1 the skipping sampler must hit each intra pair exactly once."""
    spec = PlantedPartitionSpec(n, k, 1.0, 0.0)
    g, _ = generate_planted_partition(spec, "skip")
    got = sorted((int(u), int(v)) for u, v, _ in g.undirected_edges())
    starts = np.concatenate([[0], np.cumsum(spec.sizes())])
    want = sorted((i, j) for a, b in zip(starts, starts[1:])
                  for i in range(a, b) for j in range(i + 1, b))
    assert got == want


@pytest.mark.parametrize("method", ["pairs", "skip"])
def test_edge_frequencies_within_three_sigma(method):
    spec = PlantedPartitionSpec(600, 12, 0.3, 0.02, seed=5)
    g, truth = generate_planted_partition(spec, method)
    sizes = spec.sizes()
    intra_pairs = int(np.sum(sizes * (sizes - 1) // 2))
    inter_pairs = spec.n * (spec.n - 1) // 2 - intra_pairs
    edges = list(g.undirected_edges())
    intra = sum(truth[u] == truth[v] for u, v, _ in edges)
    inter = len(edges) - intra
    for count, pairs, p in ((intra, intra_pairs, spec.p_in), (inter, inter_pairs, spec.p_out)):
        sigma = math.sqrt(pairs * p * (1 - p))
        assert abs(count - pairs * p) <= 3 * sigma


def test_mixing_band():
    p_out = p_out_for_mixing(2000, 40, 0.5, 0.3)
    spec = PlantedPartitionSpec(2000, 40, 0.5, p_out, seed=0)
    assert expected_mixing(spec) == pytest.approx(0.3)
    g, truth = generate_planted_partition(spec)
    assert 0.27 <= mixing(g, truth) <= 0.33


def test_preprocess_then_remap_truth():
    spec = PlantedPartitionSpec(200, 4, 0.05, 0.001, seed=2)
    g, truth = generate_planted_partition(spec)
    h, mapping = preprocess(g, 9)
    t = remap_clustering(truth, mapping)
    assert len(t) == h.n
    assert mixing(h, t) == pytest.approx(mixing(g, truth))
    kept = np.flatnonzero(mapping.old_to_new >= 0)
    assert np.array_equal(t[mapping.old_to_new[kept]], truth[kept])


# -- report --------------------------------------------------------------

def test_report_barbell(barbell6, frozen):
    r = report(barbell6, AB)
    assert r.modularity == pytest.approx(0.357142857, abs=1e-9)
    assert r.map_equation == pytest.approx(frozen["barbell6"]["map_full_ab"], abs=1e-12)
    assert (r.clusters, r.size_min, r.size_max, r.size_mean, r.size_median) == (2, 3, 3, 3.0, 3.0)
    one = report(barbell6, [0] * 6)
    assert one.modularity == pytest.approx(0, abs=1e-15)
    assert one.map_equation == pytest.approx(frozen["barbell6"]["map_full_one"], abs=1e-12)
    assert report(barbell6, range(6)).clusters == 6


def test_report_tsv(barbell6):
    lines = report(barbell6, AB).to_tsv().splitlines()
    assert lines[0] == "modularity\t0.357142857"
    assert lines[2] == "clusters\t2"
    assert all(len(line.split("\t")) == 2 for line in lines)
