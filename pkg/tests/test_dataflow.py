import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dslm.dataflow import (
    CapacityError,
    LockstepError,
    WorkerPool,
    block_range,
    mix64,
    owner_of_index,
)

WORKER_COUNTS = [1, 2, 3, 4]


def run_all(items, op, workers, **pool_kw):
    """Apply ``op`` to a DistArray of ``items`` and gather; checks all workers agree."""
    def program(worker):
        return op(worker.distribute(items)).gather()

    results = WorkerPool(workers, **pool_kw).run(program)
    for r in results[1:]:
        assert r == results[0]
    return results[0]


@pytest.mark.parametrize("p", WORKER_COUNTS)
def test_map(p):
    assert run_all([1, 2, 3], lambda a: a.map(lambda x: x + 1), p) == [2, 3, 4]
    assert run_all([], lambda a: a.map(lambda x: x + 1), p) == []


@pytest.mark.parametrize("p", WORKER_COUNTS)
def test_flat_map(p):
    assert run_all([1, 2], lambda a: a.flat_map(lambda x: [x, x]), p) == [1, 1, 2, 2]
    assert run_all([1, 2], lambda a: a.flat_map(lambda x: []), p) == []


@pytest.mark.parametrize("p", WORKER_COUNTS)
def test_zip(p):
    def prog(worker):
        a = worker.distribute([1, 2])
        b = worker.distribute(["a", "b"])
        return a.zip(b).gather(), a.zip(a).gather()

    assert WorkerPool(p).run(prog)[0] == ([(1, "a"), (2, "b")], [(1, 1), (2, 2)])


@pytest.mark.parametrize("p", WORKER_COUNTS)
def test_zip_realigns_partitions(p):
    def prog(worker):
        a = worker.distribute(list(range(10)))
        b = worker.distribute(list(range(12))).flat_map(lambda x: [] if x in (3, 7) else [x])
        return a.zip(b).gather()

    expected = list(zip(range(10), [x for x in range(12) if x not in (3, 7)]))
    assert WorkerPool(p).run(prog)[0] == expected


@pytest.mark.parametrize("p", WORKER_COUNTS)
def test_zip_length_mismatch(p):
    def prog(worker):
        return worker.distribute([1, 2, 3]).zip(worker.distribute([1, 2])).gather()

    with pytest.raises(ValueError):
        WorkerPool(p).run(prog)


@pytest.mark.parametrize("p", WORKER_COUNTS)
def test_sort_by_key(p):
    key = lambda kv: kv[0]  # noqa: E731
    assert run_all([(2, "x"), (1, "y")], lambda a: a.sort_by_key(key), p) == [(1, "y"), (2, "x")]
    data = [(k, i) for i, k in enumerate([1, 1, 2, 3, 3, 3])]
    assert run_all(data, lambda a: a.sort_by_key(key), p) == data
    stable = [(1, "a"), (0, "b"), (1, "c"), (0, "d")]
    assert run_all(stable, lambda a: a.sort_by_key(key), p) == [
        (0, "b"), (0, "d"), (1, "a"), (1, "c")]


@pytest.mark.parametrize("p", WORKER_COUNTS)
def test_aggregate_by_key(p):
    items = [(1, "a"), (2, "b"), (1, "c")]
    out = run_all(items, lambda a: a.aggregate_by_key(lambda kv: kv[0], lambda kv: kv[1]), p)
    assert out == [(1, ["a", "c"]), (2, ["b"])]
    out = run_all([(k, k) for k in range(5)],
                  lambda a: a.aggregate_by_key(lambda kv: kv[0], lambda kv: kv[1]), p)
    assert out == [(k, [k]) for k in range(5)]


@pytest.mark.parametrize("p", WORKER_COUNTS)
def test_aggregate_to_index(p):
    key = lambda kv: kv[0]  # noqa: E731
    val = lambda kv: kv[1]  # noqa: E731
    assert run_all([(0, "x"), (2, "z"), (1, "y")], lambda a: a.aggregate_to_index(key, 3, val), p) \
        == [(0, ["x"]), (1, ["y"]), (2, ["z"])]
    assert run_all([(0, "x"), (2, "z")], lambda a: a.aggregate_to_index(key, 3, val), p) \
        == [(0, ["x"]), (1, []), (2, ["z"])]

    def bad(a):
        return a.aggregate_to_index(key, 3)

    with pytest.raises(IndexError):
        run_all([(3, "w")], bad, p)


@pytest.mark.parametrize("p", WORKER_COUNTS)
def test_aggregate_to_index_matches_by_key(p):
    rng = np.random.default_rng(4)
    items = [(int(k), int(v)) for k, v in zip(rng.integers(0, 20, 200), rng.integers(0, 99, 200))]
    key = lambda kv: kv[0]  # noqa: E731
    by_key = run_all(items, lambda a: a.aggregate_by_key(key, sort_key=lambda kv: kv), p)
    dense = run_all(items, lambda a: a.aggregate_to_index(key, 20, sort_key=lambda kv: kv), p)
    assert [g for g in dense if g[1]] == by_key
    combined = run_all(items, lambda a: a.aggregate_to_index(
        key, 20, value=lambda kv: kv[1], combiner=lambda k, acc, x: acc + x, initial=0), p)
    assert combined == [(k, sum(x for _, x in g)) for k, g in dense]


@pytest.mark.parametrize("p", WORKER_COUNTS)
def test_all_reduce_sum(p):
    def prog(worker, items):
        return worker.distribute(items).all_reduce_sum()

    assert WorkerPool(p).run(prog, [1, 2, 3]) == [6] * p
    assert WorkerPool(p).run(prog, []) == [0] * p


def test_all_reduce_sum_bitwise_independent_of_workers():
    vals = np.random.default_rng(0).standard_normal(1000).tolist() + [1e16, 1.0, -1e16]

    def prog(worker):
        return worker.distribute(vals).all_reduce_sum()

    sums = {WorkerPool(p).run(prog)[0] for p in (1, 2, 3, 4)}
    assert len(sums) == 1
    assert sums.pop() == math.fsum(vals)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 15), st.integers(-50, 50)), max_size=80),
       st.sampled_from([2, 3, 4]))
def test_worker_count_independence(items, p):
    key = lambda kv: kv[0]  # noqa: E731

    def prog(worker):
        a = worker.distribute(items)
        return (
            a.map(lambda kv: (kv[0], kv[1] * 2)).gather(),
            a.flat_map(lambda kv: [kv] * (kv[0] % 3)).gather(),
            a.sort_by_key(key).gather(),
            a.aggregate_by_key(key, lambda kv: kv[1]).gather(),
            a.aggregate_to_index(key, 16, lambda kv: kv[1]).gather(),
            a.all_reduce_sum(lambda kv: kv[1] / 7),
            a.size(),
        )

    assert WorkerPool(p).run(prog)[0] == WorkerPool(1).run(prog)[0]


def test_lockstep_mismatch_detected():
    def prog(worker):
        a = worker.distribute(list(range(8)))
        if worker.rank == 0:
            return a.gather()
        return a.sort_by_key(lambda x: x).gather()

    with pytest.raises(LockstepError):
        WorkerPool(2, timeout=5).run(prog)


def test_early_exit_detected():
    def prog(worker):
        a = worker.distribute(list(range(8)))
        if worker.rank == 1:
            return None
        return a.gather()

    with pytest.raises(LockstepError):
        WorkerPool(3, timeout=5).run(prog)


def test_root_cause_reraised():
    def prog(worker):
        if worker.rank == 2:
            raise KeyError("boom")
        return worker.distribute([1]).gather()

    with pytest.raises(KeyError):
        WorkerPool(3, timeout=5).run(prog)


@pytest.mark.parametrize("p", [1, 2])
def test_capacity_error(p):
    items = [(0, i) for i in range(10)] + [(1, 0)]

    def prog(worker):
        return worker.distribute(items).aggregate_by_key(lambda kv: kv[0]).gather()

    with pytest.raises(CapacityError):
        WorkerPool(p, group_budget=5).run(prog)
    assert WorkerPool(p, group_budget=10).run(prog)[0][0][0] == 0


def test_rng_streams_ignore_scheduling():
    def prog(worker):
        return worker.rng("shuffle", 7).integers(0, 2**32, 4).tolist()

    a = WorkerPool(3, seed=9).run(prog)
    assert a[0] == a[1] == a[2] == WorkerPool(1, seed=9).run(prog)[0]
    assert WorkerPool(1, seed=10).run(prog)[0] != a[0]


def test_block_range_partitions():
    for size in range(0, 30):
        for p in range(1, 6):
            ranges = [block_range(r, size, p) for r in range(p)]
            assert ranges[0][0] == 0 and ranges[-1][1] == size
            for (lo, hi), (lo2, _) in zip(ranges, ranges[1:]):
                assert hi == lo2
            for k in range(size):
                lo, hi = ranges[owner_of_index(k, size, p)]
                assert lo <= k < hi


def test_mix64_is_order_sensitive():
    assert mix64(1, 2) != mix64(2, 1)
    assert mix64(1, 2) == mix64(1, 2)
    assert 0 <= mix64(-1) < 2**64
