"""In-process bulk-synchronous dataflow over partitioned immutable arrays.

Every worker is a thread running the same program.  A :class:`DistArray`
handle on a worker holds that worker's partition; the logical array is the
concatenation of partitions in worker order.  Collective operations
exchange data through a shared hub that checks all workers entered the same
collective, so lockstep violations surface as :class:`LockstepError`
instead of a hang.

All operations produce the same logical result for any worker count.
"""
from __future__ import annotations

import bisect
import math
import threading
import zlib
from typing import Any, Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "LockstepError",
    "CapacityError",
    "WorkerPool",
    "Worker",
    "DistArray",
    "block_range",
    "owner_of_index",
    "mix64",
]

MASK64 = 0xFFFFFFFFFFFFFFFF


class LockstepError(RuntimeError):
    """Workers disagreed on the sequence of collective operations."""


class CapacityError(MemoryError):
    """A single group exceeded the per-worker memory budget."""


class _PeerFailed(LockstepError):
    """Raised in workers whose peer failed; never the root cause."""


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix64(*values: int) -> int:
    """Order-sensitive 64-bit mix of integers (splitmix64 finalizer chain)."""
    h = 0
    for x in values:
        h = _splitmix64(h ^ (x & MASK64))
    return h


def block_range(rank: int, size: int, workers: int) -> tuple[int, int]:
    """Index range ``[lo, hi)`` owned by ``rank`` when ``size`` keys are split in blocks."""
    return (rank * size + workers - 1) // workers, ((rank + 1) * size + workers - 1) // workers


def owner_of_index(key: int, size: int, workers: int) -> int:
    return key * workers // size


class _Hub:
    def __init__(self, workers: int, timeout: float):
        self.workers = workers
        self.timeout = timeout
        self.cond = threading.Condition()
        self.arrived = 0
        self.generation = 0
        self.finished: set[int] = set()
        self.failure: str | None = None
        self.tags: list[Any] = [None] * workers
        self.slots: list[Any] = [None] * workers

    def _sync(self, rank: int) -> None:
        with self.cond:
            self._check(rank)
            gen = self.generation
            self.arrived += 1
            if self.arrived == self.workers:
                self.arrived = 0
                self.generation += 1
                self.cond.notify_all()
                return
            while gen == self.generation:
                self._check(rank)
                if not self.cond.wait(self.timeout) and gen == self.generation:
                    self.failure = f"collective timed out after {self.timeout}s"
                    self.cond.notify_all()
                    raise LockstepError(self.failure)

    def _check(self, rank: int) -> None:
        if self.failure is not None:
            raise _PeerFailed(self.failure)
        if self.finished:
            left = sorted(self.finished)
            raise LockstepError(
                f"worker {rank} entered a collective after worker(s) {left} left the program"
            )

    def exchange(self, rank: int, tag, payload, all_to_all: bool):
        self.tags[rank] = tag
        self.slots[rank] = payload
        self._sync(rank)
        if any(t != tag for t in self.tags):
            raise LockstepError(f"mismatched collectives across workers: {self.tags!r}")
        if all_to_all:
            incoming = [self.slots[src][rank] for src in range(self.workers)]
        else:
            incoming = list(self.slots)
        self._sync(rank)
        return incoming

    def fail(self, message: str) -> None:
        with self.cond:
            if self.failure is None:
                self.failure = message
            self.cond.notify_all()

    def finish(self, rank: int) -> None:
        with self.cond:
            self.finished.add(rank)
            self.cond.notify_all()


class Worker:
    """Per-thread execution context handed to the SPMD program."""

    def __init__(self, pool: "WorkerPool", hub: _Hub, rank: int):
        self.pool = pool
        self.rank = rank
        self.size = pool.workers
        self._hub = hub
        self._seq = 0

    @property
    def seed(self) -> int:
        return self.pool.seed

    def rng(self, purpose: str, key: int = 0) -> np.random.Generator:
        """RNG stream keyed by (seed, purpose, key), independent of scheduling."""
        tag = zlib.crc32(purpose.encode())
        return np.random.default_rng([self.pool.seed & MASK64, tag, key & MASK64])

    # -- collectives ---------------------------------------------------
    def _exchange(self, op: str, outgoing: list[list]) -> list[list]:
        """All-to-all: ``outgoing[dst]`` goes to ``dst``; returns ``incoming[src]``."""
        self._seq += 1
        return self._hub.exchange(self.rank, (op, self._seq), outgoing, True)

    def allgather(self, value, op: str = "allgather") -> list:
        """Every worker's ``value``, in rank order."""
        self._seq += 1
        return self._hub.exchange(self.rank, (op, self._seq), value, False)

    def all_reduce(self, value, op: Callable[[Iterable], Any] = sum):
        return op(self.allgather(value, "all_reduce"))

    # -- array construction -------------------------------------------
    def distribute(self, items: Sequence) -> "DistArray":
        """Take this worker's block of a globally known sequence (no communication)."""
        lo, hi = block_range(self.rank, len(items), self.size)
        return DistArray(self, list(items[lo:hi]))

    def generate(self, size: int, fn: Callable[[int], Any]) -> "DistArray":
        lo, hi = block_range(self.rank, size, self.size)
        return DistArray(self, [fn(i) for i in range(lo, hi)])


class DistArray:
    """One worker's handle on a distributed immutable array."""

    __slots__ = ("worker", "local")

    def __init__(self, worker: Worker, local: list):
        self.worker = worker
        self.local = local

    def __repr__(self):
        return f"DistArray(rank={self.worker.rank}, local={len(self.local)})"

    # -- local operations ------------------------------------------------
    def map(self, fn: Callable) -> "DistArray":
        return DistArray(self.worker, [fn(x) for x in self.local])

    def flat_map(self, fn: Callable[[Any], Iterable]) -> "DistArray":
        out: list = []
        for x in self.local:
            out.extend(fn(x))
        return DistArray(self.worker, out)

    # -- collectives -----------------------------------------------------
    def sizes(self) -> list[int]:
        return self.worker.allgather(len(self.local), "sizes")

    def size(self) -> int:
        return sum(self.sizes())

    def gather(self) -> list:
        """The whole logical array, on every worker."""
        parts = self.worker.allgather(self.local, "gather")
        return [x for part in parts for x in part]

    def zip(self, other: "DistArray") -> "DistArray":
        """Positional pairs; ``other`` is realigned to this array's partitioning if needed."""
        w = self.worker
        layout = w.allgather((len(self.local), len(other.local)), "zip")
        mine = [a for a, _ in layout]
        theirs = [b for _, b in layout]
        if sum(mine) != sum(theirs):
            raise ValueError(f"zip of arrays with lengths {sum(mine)} and {sum(theirs)}")
        if mine == theirs:
            return DistArray(w, list(zip(self.local, other.local)))
        starts = np.concatenate([[0], np.cumsum(mine)]).tolist()
        offset = sum(theirs[: w.rank])
        outgoing: list[list] = [[] for _ in range(w.size)]
        for j, x in enumerate(other.local):
            outgoing[bisect.bisect_right(starts, offset + j) - 1].append(x)
        incoming = w._exchange("zip-realign", outgoing)
        aligned = [x for part in incoming for x in part]
        return DistArray(w, list(zip(self.local, aligned)))

    def sort_by_key(self, key: Callable) -> "DistArray":
        """Globally sorted, stable with respect to logical order (sample sort)."""
        w = self.worker
        offset = sum(self.sizes()[: w.rank])
        decorated = sorted(((key(x), offset + j), x) for j, x in enumerate(self.local))
        if w.size == 1:
            return DistArray(w, [x for _, x in decorated])
        per = 4 * w.size
        step = max(1, len(decorated) // per)
        sample = [d[0] for d in decorated[step // 2::step]]
        merged = sorted(s for part in w.allgather(sample, "sort-sample") for s in part)
        splitters = [merged[(i * len(merged)) // w.size] for i in range(1, w.size)] if merged else []
        outgoing: list[list] = [[] for _ in range(w.size)]
        for d in decorated:
            outgoing[bisect.bisect_right(splitters, d[0])].append(d)
        incoming = w._exchange("sort", outgoing)
        out = sorted((d for part in incoming for d in part), key=lambda d: d[0])
        return DistArray(w, [x for _, x in out])

    def _group_checked(self, group: list, size_of):
        budget = self.worker.pool.group_budget
        if budget is not None:
            total = sum(size_of(x) for x in group) if size_of else len(group)
            if total > budget:
                raise CapacityError(f"group of size {total} exceeds worker budget {budget}")

    def aggregate_by_key(self, key: Callable, value: Callable | None = None,
                         sort_key: Callable | None = None,
                         size_of: Callable | None = None) -> "DistArray":
        """Group elements by a hashable, orderable key into ``(key, [values])``.

        Output is sorted by key; each group keeps logical input order unless
        ``sort_key`` is given.
        """
        w = self.worker
        outgoing: list[list] = [[] for _ in range(w.size)]
        for x in self.local:
            k = key(x)
            outgoing[mix64(hash(k)) % w.size].append((k, x if value is None else value(x)))
        incoming = w._exchange("aggregate_by_key", outgoing)
        groups: dict = {}
        for part in incoming:
            for k, v in part:
                groups.setdefault(k, []).append(v)
        for g in groups.values():
            if sort_key is not None:
                g.sort(key=sort_key)
            self._group_checked(g, size_of)
        return DistArray(w, list(groups.items())).sort_by_key(lambda kv: kv[0])

    def aggregate_to_index(self, key: Callable[[Any], int], size: int,
                           value: Callable | None = None,
                           sort_key: Callable | None = None,
                           combiner: Callable | None = None,
                           initial: Any = None,
                           size_of: Callable | None = None) -> "DistArray":
        """Group by a dense integer key in ``[0, size)``.

        The output has exactly ``size`` elements ``(key, group)`` in key order;
        missing keys get an empty group.  With ``combiner(key, acc, item)``
        items are folded as they arrive instead (``initial`` starts each fold),
        so the combiner must be associative and commutative.
        """
        w = self.worker
        P = w.size
        outgoing: list[list] = [[] for _ in range(P)]
        for x in self.local:
            k = key(x)
            if not 0 <= k < size:
                raise IndexError(f"aggregate_to_index key {k} outside [0, {size})")
            outgoing[k * P // size].append((k, x if value is None else value(x)))
        incoming = w._exchange("aggregate_to_index", outgoing)
        lo, hi = block_range(w.rank, size, P)
        if combiner is not None:
            acc = [initial] * (hi - lo)
            for part in incoming:
                for k, v in part:
                    acc[k - lo] = combiner(k, acc[k - lo], v)
            return DistArray(w, [(lo + i, a) for i, a in enumerate(acc)])
        groups: list[list] = [[] for _ in range(hi - lo)]
        for part in incoming:
            for k, v in part:
                groups[k - lo].append(v)
        for g in groups:
            if sort_key is not None and len(g) > 1:
                g.sort(key=sort_key)
            self._group_checked(g, size_of)
        return DistArray(w, [(lo + i, g) for i, g in enumerate(groups)])

    def all_reduce_sum(self, value: Callable | None = None) -> float:
        """Exactly rounded sum of all elements, identical on every worker."""
        vals = self.local if value is None else [value(x) for x in self.local]
        parts = self.worker.allgather(vals, "all_reduce_sum")
        return math.fsum(x for part in parts for x in part)


class WorkerPool:
    """Runs an SPMD program on ``workers`` threads.

    ``group_budget`` caps the size of one aggregated group (element count,
    or the caller's ``size_of`` measure); ``None`` means unbounded.
    """

    def __init__(self, workers: int = 1, seed: int = 0, group_budget: int | None = None,
                 timeout: float = 600.0):
        if workers < 1:
            raise ValueError("need at least one worker")
        self.workers = workers
        self.seed = seed
        self.group_budget = group_budget
        self.timeout = timeout

    def run(self, program: Callable[..., Any], *args, **kwargs) -> list:
        """Run ``program(worker, *args, **kwargs)`` on every worker; return per-worker results."""
        hub = _Hub(self.workers, self.timeout)
        results: list = [None] * self.workers
        errors: list[BaseException | None] = [None] * self.workers

        def body(rank: int):
            worker = Worker(self, hub, rank)
            try:
                results[rank] = program(worker, *args, **kwargs)
            except BaseException as exc:  # noqa: BLE001 - re-raised by run()
                errors[rank] = exc
                hub.fail(f"worker {rank} failed: {exc!r}")
            else:
                hub.finish(rank)

        if self.workers == 1:
            body(0)
        else:
            threads = [threading.Thread(target=body, args=(r,), name=f"dslm-worker-{r}")
                       for r in range(self.workers)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        root = [e for e in errors if e is not None and not isinstance(e, _PeerFailed)]
        if root:
            raise root[0]
        if any(errors):
            raise next(e for e in errors if e is not None)
        return results
