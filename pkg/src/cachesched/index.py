"""Centralized object-location index, loose-coherence batching, and the
index microbenchmark with the analytical distributed-lookup comparison.

The dispatcher records which executors cache which objects. Executors do
not write the index directly: they enqueue (add | remove) records which
are applied in batches, so the index is loosely coherent — an entry can be
stale by up to one update interval plus the in-flight batch. A lookup that
returns a stale executor is handled by the fetch path (fall back to
persistent storage and enqueue a corrective remove).
"""

from __future__ import annotations

import math
import threading
import time
import tracemalloc
from collections import deque
from dataclasses import dataclass, field

from .errors import ConfigurationError

ADD = "add"
REMOVE = "remove"

_EMPTY: frozenset = frozenset()


class LocationIndex:
    """Map object id -> set of executor ids, updated via per-executor batches.

    With update_interval == 0 the engine applies records synchronously and
    the index always matches executor cache contents.
    """

    def __init__(self, update_interval: float = 1.0):
        if update_interval < 0:
            raise ConfigurationError("update_interval must be >= 0")
        self.update_interval = update_interval
        self.locations: dict[str, set[str | int]] = {}
        self.pending_updates: dict[str | int, deque] = {}

    @property
    def synchronous(self) -> bool:
        return self.update_interval == 0

    def locate(self, object_id: str) -> frozenset:
        """Current (possibly stale) location set; empty means persistent storage."""
        found = self.locations.get(object_id)
        return frozenset(found) if found else _EMPTY

    def record(self, executor, op: str, object_id: str) -> None:
        """Enqueue one cache-change record from an executor (applied on flush)."""
        if op not in (ADD, REMOVE):
            raise ConfigurationError(f"unknown index record op {op!r}")
        self.pending_updates.setdefault(executor, deque()).append((op, object_id))
        if self.synchronous:
            self.apply_updates(executor)

    def apply_updates(self, executor) -> list[tuple[str, str]]:
        """Drain one executor's queue into the location map, in order.

        Returns the applied records (the engine uses them to retire
        dispatcher-side pending-fetch entries). Idempotent when empty.
        """
        queue = self.pending_updates.get(executor)
        if not queue:
            return []
        applied = []
        while queue:
            op, object_id = queue.popleft()
            if op == ADD:
                self.locations.setdefault(object_id, set()).add(executor)
            else:
                holders = self.locations.get(object_id)
                if holders is not None:
                    holders.discard(executor)
                    if not holders:
                        del self.locations[object_id]
            applied.append((op, object_id))
        return applied

    def apply_all(self) -> int:
        """Flush every executor's queue; returns total records applied."""
        return sum(len(self.apply_updates(ex)) for ex in list(self.pending_updates))

    def deregister_executor(self, executor) -> None:
        """Remove an executor everywhere: pending batch applied, then purged."""
        self.apply_updates(executor)
        self.pending_updates.pop(executor, None)
        empty = [oid for oid, holders in self.locations.items()
                 if executor in holders and len(holders) == 1]
        for oid, holders in self.locations.items():
            holders.discard(executor)
        for oid in empty:
            del self.locations[oid]

    def pending_count(self, executor) -> int:
        queue = self.pending_updates.get(executor)
        return len(queue) if queue else 0


# ---------------------------------------------------------------------------
# Microbenchmark
# ---------------------------------------------------------------------------

@dataclass
class MicrobenchResult:
    num_entries: int
    num_inserts: int
    num_lookups: int
    insert_ns_mean: float
    lookup_ns_mean: float | None
    lookups_per_sec: float | None
    bytes_per_entry: float
    reader_threads: int = 0
    contended_lookups_per_sec: float | None = None

    def as_dict(self) -> dict:
        return {
            "num_entries": self.num_entries,
            "num_inserts": self.num_inserts,
            "num_lookups": self.num_lookups,
            "insert_ns_mean": self.insert_ns_mean,
            "lookup_ns_mean": self.lookup_ns_mean,
            "lookups_per_sec": self.lookups_per_sec,
            "bytes_per_entry": self.bytes_per_entry,
            "reader_threads": self.reader_threads,
            "contended_lookups_per_sec": self.contended_lookups_per_sec,
        }


def _time_lookups(table: dict, keys: list) -> float:
    """Wall time in seconds for one lookup per key, loop overhead included."""
    get = table.get
    t0 = time.perf_counter_ns()
    for k in keys:
        get(k)
    return (time.perf_counter_ns() - t0) / 1e9


def index_microbench(
    num_entries: int,
    num_lookups: int = 1_000_000,
    num_inserts: int = 100_000,
    reader_threads: int = 0,
) -> MicrobenchResult:
    """Measure insert/lookup cost of the in-memory location table.

    Populates a fresh table with num_entries synthetic single-holder
    entries (memory per entry is measured around this population), then
    times num_inserts additional inserts and num_lookups lookups over the
    populated keys. reader_threads > 0 additionally runs that many
    concurrent reader threads over the shared table and reports their
    aggregate throughput.
    """
    if num_entries < 1:
        raise ConfigurationError("num_entries must be >= 1")

    keys = [f"obj{i:09d}" for i in range(num_entries)]
    holders = [f"ex{i % 128:03d}" for i in range(num_entries)]

    tracemalloc.start()
    before, _ = tracemalloc.get_traced_memory()
    table: dict[str, set] = {}
    for k, h in zip(keys, holders):
        table[k] = {h}
    after, _ = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    bytes_per_entry = (after - before) / num_entries

    insert_keys = [f"ins{i:09d}" for i in range(num_inserts)]
    t0 = time.perf_counter_ns()
    for k in insert_keys:
        table[k] = {"ex000"}
    insert_ns = time.perf_counter_ns() - t0
    insert_ns_mean = insert_ns / max(num_inserts, 1)

    lookup_ns_mean = None
    lookups_per_sec = None
    if num_lookups > 0:
        probe = [keys[i % num_entries] for i in range(num_lookups)]
        elapsed = _time_lookups(table, probe)
        lookup_ns_mean = elapsed * 1e9 / num_lookups
        lookups_per_sec = num_lookups / elapsed if elapsed > 0 else None

    contended = None
    if reader_threads > 0 and num_lookups > 0:
        per_thread = [keys[i % num_entries] for i in range(num_lookups)]
        times = [0.0] * reader_threads
        barrier = threading.Barrier(reader_threads)

        def reader(slot):
            barrier.wait()
            times[slot] = _time_lookups(table, per_thread)

        threads = [threading.Thread(target=reader, args=(i,)) for i in range(reader_threads)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        contended = sum(num_lookups / t for t in times if t > 0)

    return MicrobenchResult(
        num_entries=num_entries,
        num_inserts=num_inserts,
        num_lookups=num_lookups,
        insert_ns_mean=insert_ns_mean,
        lookup_ns_mean=lookup_ns_mean,
        lookups_per_sec=lookups_per_sec,
        bytes_per_entry=bytes_per_entry,
        reader_threads=reader_threads,
        contended_lookups_per_sec=contended,
    )


# ---------------------------------------------------------------------------
# Analytical model of a distributed replica-location lookup service
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RemoteLookupModel:
    """Log-fit latency of a distributed lookup service vs node count.

    latency(n) = a + b*ln(n) milliseconds, anchored so that one node costs
    base_latency_ms and anchor_nodes cost anchor_latency_ms.
    """

    base_latency_ms: float = 0.5
    anchor_nodes: int = 15
    anchor_latency_ms: float = 3.0
    a: float = field(init=False)
    b: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "a", self.base_latency_ms)
        object.__setattr__(
            self,
            "b",
            (self.anchor_latency_ms - self.base_latency_ms) / math.log(self.anchor_nodes),
        )

    def latency_ms(self, nodes: int) -> float:
        if nodes < 1:
            raise ConfigurationError(f"node count must be >= 1, got {nodes}")
        return self.a + self.b * math.log(nodes)

    def aggregate_lookups_per_sec(self, nodes: int) -> float:
        """n concurrent nodes each answering one lookup per latency."""
        return nodes / (self.latency_ms(nodes) / 1000.0)

    def crossover_nodes(self, target_lookups_per_sec: float) -> int:
        """Smallest node count whose aggregate throughput reaches the target.

        Aggregate throughput dips from n=1 to n=2 with the default anchors
        and is strictly increasing from n=2 on, so n=1 is checked directly
        and the increasing region is bisected.
        """
        if target_lookups_per_sec <= 0:
            raise ConfigurationError("target must be > 0")
        if self.aggregate_lookups_per_sec(1) >= target_lookups_per_sec:
            return 1
        lo, hi = 2, 2
        while self.aggregate_lookups_per_sec(hi) < target_lookups_per_sec:
            lo = hi
            hi *= 2
            if hi > 1 << 60:
                raise ConfigurationError("target throughput unreachable")
        while lo < hi:
            mid = (lo + hi) // 2
            if self.aggregate_lookups_per_sec(mid) >= target_lookups_per_sec:
                hi = mid
            else:
                lo = mid + 1
        return lo
