"""Deterministic discrete-event simulator binding the dispatcher, executors,
location index, provisioner, and the three-tier storage model.

Timing model, in simulated seconds with sizes in bytes:

* Shared persistent store: one globally shared read capacity with a
  saturation knee — every concurrent fetch proceeds at
  min(cap / max(active, io_servers), local_disk_bw), so aggregate
  throughput ramps linearly up to io_servers concurrent readers and stays
  capped afterwards. Implemented as uniform-rate processor sharing.
* Local disk: per-executor, uncontended; a task's local read of
  working_size runs at local_disk_bw.
* Peer network: each executor NIC is processor-shared across the peer
  transfers touching it; a transfer runs at min(source share, destination
  share, local_disk_bw). An executor serves peers while computing.

All tasks are submitted to the wait queue at t=0 in workload order.
Executors acquire a task's inputs sequentially: local cache hit, else a
hinted peer, else (after re-checking the dispatcher's live knowledge) the
persistent store; fetched objects are inserted into the cache and then
read locally. Under the first-available policy there is no caching at all
and every input is read straight from the persistent store.

The dispatcher keeps an overlay of in-flight fetches on top of the
location index: an executor fetching an object counts as a location for
overlap scoring, hints, and acquisition, and a second fetch of the same
object waits for the first copy instead of hitting the persistent store
again. An overlay entry is retired when the executor's index add record
is applied, at which point the index itself carries the location.
"""

from __future__ import annotations

import dataclasses
import enum
import heapq
import time as _time
from collections import deque
from dataclasses import dataclass, field

from .cache import CacheConfig, ExecutorCache
from .errors import ConfigurationError, SchedulingError
from .index import ADD, REMOVE, LocationIndex
from .metrics import (
    MetricsReport,
    TIER_LOCAL,
    TIER_PEER,
    TIER_PERSISTENT,
)
from .provisioner import (
    Allocate,
    ProvisionerConfig,
    Release,
    ReleaseCachePolicy,
    provision_evaluate,
)
from .scheduler import DispatchPolicy, WaitQueue, select
from .workload import DataObject, Workload

GBPS = 1e9 / 8.0  # bytes per second in one Gb/s


def shared_bandwidth_share(active_transfers: int, cap: float, io_servers: int) -> float:
    """Per-transfer share of a globally capped resource with a saturation knee.

    Below io_servers concurrent transfers each is held to cap/io_servers
    (per-server ceiling); beyond the knee the cap is split evenly. The
    aggregate therefore never exceeds cap and reaches it exactly at the knee.
    """
    if active_transfers < 1:
        raise ConfigurationError("active_transfers must be >= 1")
    return cap / max(active_transfers, io_servers)


@dataclass(frozen=True)
class ResourceModel:
    """Bandwidths in Gb/s; persistent caps are cluster-wide, the rest per node."""

    persistent_read_gbps: float = 3.4
    persistent_rw_gbps: float = 1.1
    persistent_io_servers: int = 8
    local_disk_gbps: float = 76.0 / 162.0
    peer_net_gbps: float = 1.0
    per_transfer_latency_s: float = 0.0

    def __post_init__(self):
        for name in ("persistent_read_gbps", "persistent_rw_gbps",
                     "local_disk_gbps", "peer_net_gbps"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be > 0")
        if self.persistent_io_servers < 1:
            raise ConfigurationError("persistent_io_servers must be >= 1")
        if self.per_transfer_latency_s < 0:
            raise ConfigurationError("per_transfer_latency_s must be >= 0")

    @property
    def persistent_read_bps(self) -> float:
        return self.persistent_read_gbps * GBPS

    @property
    def local_disk_bps(self) -> float:
        return self.local_disk_gbps * GBPS

    @property
    def peer_net_bps(self) -> float:
        return self.peer_net_gbps * GBPS


class EventKind(enum.IntEnum):
    # Heap tie-break order for events at the same instant.
    TASK_ARRIVAL = 0
    TRANSFER_COMPLETE = 1
    COMPUTE_COMPLETE = 2
    INDEX_FLUSH = 3
    PROVISION_TICK = 4
    EXECUTOR_READY = 5


@dataclass
class Scenario:
    """Everything needed for a reproducible run."""

    workload: Workload
    dispatch: DispatchPolicy = DispatchPolicy.MAX_COMPUTE_UTIL
    num_executors: int | None = None
    provisioner: ProvisionerConfig | None = None
    cache: CacheConfig | None = None
    resources: ResourceModel = field(default_factory=ResourceModel)
    update_interval: float = 1.0
    warm_caches: bool = False
    seed: int = 0
    task_overhead_s: float = 0.0
    byte_weighted_scoring: bool = False
    max_defer_rounds: int | None = None
    throughput_bucket_s: float = 1.0
    collect_decision_log: bool = False
    collect_access_log: bool = False

    @property
    def caching(self) -> bool:
        # First-available executors read persistent storage directly and
        # keep no cache; every other policy caches.
        return self.dispatch is not DispatchPolicy.FIRST_AVAILABLE

    def validate(self) -> None:
        if (self.num_executors is None) == (self.provisioner is None):
            raise ConfigurationError(
                "exactly one of num_executors and provisioner must be set"
            )
        if self.num_executors is not None and self.num_executors < 1:
            raise ConfigurationError("num_executors must be >= 1")
        if self.update_interval < 0:
            raise ConfigurationError("update_interval must be >= 0")
        if self.task_overhead_s < 0:
            raise ConfigurationError("task_overhead_s must be >= 0")
        if self.throughput_bucket_s <= 0:
            raise ConfigurationError("throughput_bucket_s must be > 0")
        if self.max_defer_rounds is not None and self.max_defer_rounds < 0:
            raise ConfigurationError("max_defer_rounds must be >= 0")
        if self.caching:
            if self.cache is None:
                raise ConfigurationError(
                    f"dispatch policy {self.dispatch.value} requires a cache config"
                )
            oversized = [
                obj.id for obj in self.workload.objects.values()
                if obj.working_size > self.cache.capacity
            ]
            if oversized:
                raise ConfigurationError(
                    f"objects larger than the cache capacity: {oversized[:5]}"
                )
        elif self.warm_caches:
            raise ConfigurationError("warm_caches requires a caching dispatch policy")


class _Executor:
    __slots__ = ("id", "cache", "busy", "idle_since")

    def __init__(self, ex_id: int, cache: ExecutorCache | None, now: float):
        self.id = ex_id
        self.cache = cache
        self.busy = False
        self.idle_since = now


class _Flight:
    """One in-flight (or not-yet-indexed) fetch of an object to an executor."""

    __slots__ = ("executor_id", "object_id", "in_flight", "waiters")

    def __init__(self, executor_id: int, object_id: str):
        self.executor_id = executor_id
        self.object_id = object_id
        self.in_flight = True
        self.waiters: list = []  # (_TaskRun, DataObject) pairs


class _TaskRun:
    __slots__ = ("task", "executor_id", "hints", "idx")

    def __init__(self, task, executor_id, hints):
        self.task = task
        self.executor_id = executor_id
        self.hints = hints
        self.idx = 0


class _DispatchView:
    """Location knowledge used for scoring and hints: index plus overlay."""

    __slots__ = ("index", "overlay")

    def __init__(self, index: LocationIndex, overlay: dict):
        self.index = index
        self.overlay = overlay

    def locate(self, object_id: str) -> frozenset:
        found = self.index.locate(object_id)
        flights = self.overlay.get(object_id)
        if flights:
            return frozenset(found | flights.keys())
        return found


class _SharedStore:
    """Uniform-rate processor sharing of the persistent read capacity.

    Every active fetch proceeds at the same rate, so per-flow progress is
    tracked by one virtual service counter: a flow entering at counter
    value v with size s completes when the counter reaches v + s. Only the
    earliest completion is scheduled; membership changes bump a version
    stamp that invalidates the stale event.
    """

    def __init__(self, sim: "Simulation", cap_bps: float, io_servers: int,
                 disk_bps: float):
        self.sim = sim
        self.cap = cap_bps
        self.io = io_servers
        self.disk = disk_bps
        self.virtual = 0.0
        self.updated = 0.0
        self.flows: dict[int, object] = {}  # flow id -> completion callback
        self.heap: list[tuple[float, int]] = []  # (virtual target, flow id)
        self.next_id = 0
        self.version = 0

    def rate(self) -> float:
        return min(shared_bandwidth_share(len(self.flows), self.cap, self.io),
                   self.disk)

    def active(self) -> int:
        return len(self.flows)

    def start(self, size: int, callback) -> None:
        self._advance()
        fid = self.next_id
        self.next_id += 1
        self.flows[fid] = callback
        heapq.heappush(self.heap, (self.virtual + size, fid))
        self._reschedule()

    def _advance(self) -> None:
        if self.flows:
            self.virtual += (self.sim.now - self.updated) * self.rate()
        self.updated = self.sim.now

    def _reschedule(self) -> None:
        self.version += 1
        if not self.flows:
            return
        target = self.heap[0][0]
        dt = max(target - self.virtual, 0.0) / self.rate()
        version = self.version
        self.sim.push(self.sim.now + dt, EventKind.TRANSFER_COMPLETE,
                      lambda: self._complete(version))

    def _complete(self, version: int) -> None:
        if version != self.version:
            return
        self._advance()
        done = []
        # 1e-6 bytes of slack absorbs float error in the advance; flows
        # with equal targets (joined together, same size) finish together.
        # A head whose leftover service cannot advance the clock by even
        # one representable step is also done: rescheduling it would fire
        # at the same timestamp with dt=0 and spin forever.
        while self.heap and (
            self.heap[0][0] <= self.virtual + 1e-6
            or self.sim.now + (self.heap[0][0] - self.virtual) / self.rate()
            <= self.sim.now
        ):
            _, fid = heapq.heappop(self.heap)
            done.append(self.flows.pop(fid))
        self._reschedule()
        for callback in done:
            callback()


class _PeerTransfer:
    __slots__ = ("src", "dst", "remaining", "rate", "callback")

    def __init__(self, src, dst, size, callback):
        self.src = src
        self.dst = dst
        self.remaining = float(size)
        self.rate = 0.0
        self.callback = callback


class _PeerFabric:
    """Per-NIC processor sharing for cache-to-cache transfers.

    A transfer's rate is min(share of the source NIC, share of the
    destination NIC, local disk bandwidth); all rates are recomputed on
    every membership change. O(active transfers) per change.
    """

    def __init__(self, sim: "Simulation", cap_bps: float, disk_bps: float):
        self.sim = sim
        self.cap = cap_bps
        self.disk = disk_bps
        self.transfers: dict[int, _PeerTransfer] = {}
        self.degree: dict[int, int] = {}
        self.updated = 0.0
        self.version = 0
        self.next_id = 0

    def active(self) -> int:
        return len(self.transfers)

    def start(self, src: int, dst: int, size: int, callback) -> None:
        self._advance()
        tid = self.next_id
        self.next_id += 1
        self.transfers[tid] = _PeerTransfer(src, dst, size, callback)
        self.degree[src] = self.degree.get(src, 0) + 1
        self.degree[dst] = self.degree.get(dst, 0) + 1
        self._rerate()

    def _advance(self) -> None:
        dt = self.sim.now - self.updated
        if dt > 0:
            for t in self.transfers.values():
                t.remaining -= t.rate * dt
        self.updated = self.sim.now

    def _rerate(self) -> None:
        self.version += 1
        if not self.transfers:
            return
        for t in self.transfers.values():
            t.rate = min(self.cap / self.degree[t.src],
                         self.cap / self.degree[t.dst],
                         self.disk)
        eta, _ = min(
            (max(t.remaining, 0.0) / t.rate, tid)
            for tid, t in self.transfers.items()
        )
        version = self.version
        self.sim.push(self.sim.now + eta, EventKind.TRANSFER_COMPLETE,
                      lambda: self._complete(version))

    def _complete(self, version: int) -> None:
        if version != self.version:
            return
        self._advance()
        # Same byte slack as the store, plus the clock-resolution sweep: a
        # transfer whose remaining time rounds to zero at the current
        # timestamp can never make progress and must finish now.
        done = sorted(
            tid for tid, t in self.transfers.items()
            if t.remaining <= 1e-6
            or self.sim.now + max(t.remaining, 0.0) / t.rate <= self.sim.now
        )
        finished = []
        for tid in done:
            t = self.transfers.pop(tid)
            for node in (t.src, t.dst):
                self.degree[node] -= 1
                if self.degree[node] == 0:
                    del self.degree[node]
            finished.append(t)
        self._rerate()
        for t in finished:
            t.callback()


class Simulation:
    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.sc = scenario
        res = scenario.resources
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        self._done = False

        self.queue = WaitQueue()
        self.index = LocationIndex(scenario.update_interval)
        self.overlay: dict[str, dict[int, _Flight]] = {}
        self.view = _DispatchView(self.index, self.overlay)
        self.store = _SharedStore(self, res.persistent_read_bps,
                                  res.persistent_io_servers, res.local_disk_bps)
        self.peers = _PeerFabric(self, res.peer_net_bps, res.local_disk_bps)

        self.executors: dict[int, _Executor] = {}
        self.idle: set[int] = set()
        self._next_ex_id = 0
        self._pending_alloc = 0
        self._retained: deque[ExecutorCache] = deque()

        self.tasks_by_id = {t.id: t for t in scenario.workload.tasks}
        self.total_tasks = len(scenario.workload.tasks)
        self.completed = 0
        self._defer_counts: dict[str, int] = {}
        self._weights = (
            {oid: obj.working_size for oid, obj in scenario.workload.objects.items()}
            if scenario.byte_weighted_scoring else None
        )

        self.report = MetricsReport(throughput_bucket_s=scenario.throughput_bucket_s)
        if scenario.collect_decision_log:
            self.report.decision_log = []
        if scenario.collect_access_log:
            self.report.access_log = []
        self._rounds = 0
        self._round_wall = 0.0

    # -- event plumbing ------------------------------------------------

    def push(self, when: float, kind: EventKind, callback) -> None:
        heapq.heappush(self._heap, (when, int(kind), self._seq, callback))
        self._seq += 1

    def _after_latency(self, callback) -> None:
        delay = self.sc.resources.per_transfer_latency_s
        if delay > 0:
            self.push(self.now + delay, EventKind.TRANSFER_COMPLETE, callback)
        else:
            callback()

    # -- setup ---------------------------------------------------------

    def _make_executor(self) -> _Executor:
        ex_id = self._next_ex_id
        self._next_ex_id += 1
        cache = None
        if self.sc.caching:
            if self._retained:
                cache = self._retained.popleft()
                for oid in list(cache.contents()):
                    self._record_index(ex_id, ADD, oid)
            else:
                cfg = dataclasses.replace(
                    self.sc.cache, seed=self.sc.cache.seed + ex_id
                )
                cache = ExecutorCache(cfg)
        ex = _Executor(ex_id, cache, self.now)
        self.executors[ex_id] = ex
        self.idle.add(ex_id)
        return ex

    def _warm_caches(self) -> None:
        # Round-robin the catalog over the pool before the clock starts;
        # the index is fully synchronized with the pre-populated caches.
        ids = sorted(self.executors)
        for i, obj in enumerate(self.sc.workload.objects.values()):
            ex = self.executors[ids[i % len(ids)]]
            victims = ex.cache.insert(obj)
            for victim in victims:
                self.index.record(ex.id, REMOVE, victim)
            self.index.record(ex.id, ADD, obj.id)
        self.index.apply_all()

    # -- index bookkeeping ---------------------------------------------

    def _record_index(self, ex_id: int, op: str, object_id: str) -> None:
        self.index.record(ex_id, op, object_id)
        if self.index.synchronous and op == ADD:
            self._clear_flight(ex_id, object_id)

    def _clear_flight(self, ex_id: int, object_id: str) -> None:
        flights = self.overlay.get(object_id)
        if not flights:
            return
        flight = flights.get(ex_id)
        if flight is not None and not flight.in_flight:
            del flights[ex_id]
            if not flights:
                del self.overlay[object_id]

    def _apply_index_updates(self, ex_id: int) -> None:
        for op, object_id in self.index.apply_updates(ex_id):
            if op == ADD:
                self._clear_flight(ex_id, object_id)

    def _flush_tick(self) -> None:
        if self._done:
            return
        for ex_id in list(self.index.pending_updates):
            self._apply_index_updates(ex_id)
        # Fresh index knowledge can unblock a deferred task.
        self._round()
        if self._stalled():
            raise SchedulingError(
                f"dispatch stalled with {len(self.queue)} queued tasks and "
                "no executor busy, allocating, or transferring"
            )
        self.push(self.now + self.sc.update_interval, EventKind.INDEX_FLUSH,
                  self._flush_tick)

    def _stalled(self) -> bool:
        return (
            bool(self.queue)
            and self._pending_alloc == 0
            and self.store.active() == 0
            and self.peers.active() == 0
            and not any(ex.busy for ex in self.executors.values())
        )

    # -- dispatch ------------------------------------------------------

    def _round(self) -> None:
        if self._done or not self.queue or not self.idle:
            return
        policy = self.sc.dispatch
        forced = None
        if policy is DispatchPolicy.MAX_CACHE_HIT and self.sc.max_defer_rounds is not None:
            forced = {
                tid for tid, n in self._defer_counts.items()
                if n >= self.sc.max_defer_rounds
            }
        wall = _time.perf_counter()
        decisions = select(
            policy, self.queue, self.idle, self.view,
            all_executors=self.executors.keys(),
            weights=self._weights,
            forced_tasks=forced,
        )
        self._round_wall += _time.perf_counter() - wall
        self._rounds += 1
        if policy is DispatchPolicy.MAX_CACHE_HIT and self.sc.max_defer_rounds is not None:
            for task in self.queue:
                self._defer_counts[task.id] = self._defer_counts.get(task.id, 0) + 1
        for decision in decisions:
            self._start_task(decision)

    def _start_task(self, decision) -> None:
        ex = self.executors[decision.executor_id]
        if ex.busy:
            raise SchedulingError(
                f"executor {ex.id} assigned while busy (task {decision.task_id})"
            )
        ex.busy = True
        ex.idle_since = None
        self.idle.discard(ex.id)
        self._defer_counts.pop(decision.task_id, None)
        if self.report.decision_log is not None:
            self.report.decision_log.append((
                self.now, decision.task_id, decision.executor_id,
                self.sc.dispatch.value, decision.overlap,
                sum(len(v) for v in decision.hints.values()),
            ))
        run = _TaskRun(self.tasks_by_id[decision.task_id], ex.id, decision.hints)
        self._advance_acquisition(run)

    # -- input acquisition ---------------------------------------------

    def _advance_acquisition(self, run: _TaskRun) -> None:
        task = run.task
        if run.idx >= len(task.required_objects):
            duration = task.compute_time + self.sc.task_overhead_s
            self.push(self.now + duration, EventKind.COMPUTE_COMPLETE,
                      lambda: self._task_done(run))
            return
        oid = task.required_objects[run.idx]
        obj = self.sc.workload.objects[oid]

        if not self.sc.caching:
            self._log_access(run, oid, TIER_PERSISTENT)
            self.report.record_access(TIER_PERSISTENT)
            self._after_latency(
                lambda: self.store.start(
                    obj.transfer_size, lambda: self._fa_fetched(run, obj)
                )
            )
            return

        ex = self.executors[run.executor_id]
        if ex.cache.lookup(oid):
            self._log_access(run, oid, TIER_LOCAL)
            self.report.record_access(TIER_LOCAL)
            duration = obj.working_size / self.sc.resources.local_disk_bps
            self.push(self.now + duration, EventKind.TRANSFER_COMPLETE,
                      lambda: self._local_read_done(run, obj))
            return

        kind, source = self._resolve_source(run, oid)
        flight = _Flight(run.executor_id, oid)
        self.overlay.setdefault(oid, {})[run.executor_id] = flight
        if kind == "peer":
            self._log_access(run, oid, TIER_PEER)
            self.report.record_access(TIER_PEER)
            self._start_peer_fetch(run, obj, source)
        elif kind == "wait":
            # The copy is already on its way to another executor; serve
            # from there once it lands instead of re-reading the store.
            self._log_access(run, oid, TIER_PEER)
            self.report.record_access(TIER_PEER)
            source.waiters.append((run, obj))
        else:
            self._log_access(run, oid, TIER_PERSISTENT)
            self.report.record_access(TIER_PERSISTENT)
            self._after_latency(
                lambda: self.store.start(
                    obj.transfer_size, lambda: self._fetched(run, obj, TIER_PERSISTENT)
                )
            )

    def _resolve_source(self, run: _TaskRun, oid: str):
        """Pick the fetch source for a missing object.

        Hinted peers are tried in order (resident first, then in-flight);
        a hinted peer with neither gets a corrective remove enqueued. As a
        last step before falling back to persistent storage the live
        dispatcher knowledge is consulted, which catches copies that
        started moving after the hints were computed.
        """
        me = run.executor_id
        flights = self.overlay.get(oid, {})
        hinted = run.hints.get(oid, ())

        for p in hinted:
            if p != me and p in self.executors and oid in self.executors[p].cache:
                return "peer", p
        for p in hinted:
            if p != me:
                flight = flights.get(p)
                if flight is not None and flight.in_flight:
                    return "wait", flight
        for p in hinted:
            if p != me and p in self.index.locate(oid):
                self._record_index(p, REMOVE, oid)

        live = sorted((self.index.locate(oid) | flights.keys()) - {me})
        for p in live:
            if p in self.executors and oid in self.executors[p].cache:
                return "peer", p
        for p in live:
            flight = flights.get(p)
            if flight is not None and flight.in_flight:
                return "wait", flight
        return "persistent", None

    def _start_peer_fetch(self, run: _TaskRun, obj: DataObject, src: int) -> None:
        self._after_latency(
            lambda: self.peers.start(
                src, run.executor_id, obj.transfer_size,
                lambda: self._fetched(run, obj, TIER_PEER)
            )
        )

    def _fetched(self, run: _TaskRun, obj: DataObject, tier: str) -> None:
        """Fetched bytes arrived: install in the cache, then read locally."""
        self.report.record_bytes(tier, obj.transfer_size, self.now)
        self._install(run.executor_id, obj)
        duration = obj.working_size / self.sc.resources.local_disk_bps
        self.push(self.now + duration, EventKind.TRANSFER_COMPLETE,
                  lambda: self._local_read_done(run, obj))

    def _fa_fetched(self, run: _TaskRun, obj: DataObject) -> None:
        self.report.record_bytes(TIER_PERSISTENT, obj.transfer_size, self.now)
        run.idx += 1
        self._advance_acquisition(run)

    def _local_read_done(self, run: _TaskRun, obj: DataObject) -> None:
        self.report.record_bytes(TIER_LOCAL, obj.working_size, self.now)
        run.idx += 1
        self._advance_acquisition(run)

    def _install(self, ex_id: int, obj: DataObject) -> None:
        ex = self.executors[ex_id]
        victims = ex.cache.insert(obj)
        for victim in victims:
            self._record_index(ex_id, REMOVE, victim)
        flight = self.overlay.get(obj.id, {}).get(ex_id)
        if flight is not None:
            flight.in_flight = False
        self._record_index(ex_id, ADD, obj.id)
        if flight is not None and flight.waiters:
            waiters, flight.waiters = flight.waiters, []
            for waiter_run, waiter_obj in waiters:
                self._start_peer_fetch(waiter_run, waiter_obj, ex_id)

    # -- lifecycle -----------------------------------------------------

    def _task_done(self, run: _TaskRun) -> None:
        ex = self.executors[run.executor_id]
        ex.busy = False
        ex.idle_since = self.now
        self.idle.add(ex.id)
        self.completed += 1
        if self.completed >= self.total_tasks:
            self._done = True
            return
        self._round()
        if self.sc.provisioner is not None:
            self._evaluate_provisioner()
            if ex.id in self.idle:
                self.push(self.now + self.sc.provisioner.idle_timeout,
                          EventKind.PROVISION_TICK, self._provision_tick)

    def _provision_tick(self) -> None:
        if self._done or self.sc.provisioner is None:
            return
        self._evaluate_provisioner()

    def _evaluate_provisioner(self) -> None:
        cfg = self.sc.provisioner
        actions = provision_evaluate(
            cfg, len(self.queue), list(self.executors.values()), self.now,
            self._pending_alloc,
        )
        for action in actions:
            if isinstance(action, Allocate):
                self._pending_alloc += action.count
                for _ in range(action.count):
                    self.push(self.now + cfg.startup_delay,
                              EventKind.EXECUTOR_READY, self._executor_ready)
            elif isinstance(action, Release):
                for ex_id in action.executor_ids:
                    self._release_executor(ex_id)
        if actions:
            self._sample_pool()

    def _executor_ready(self) -> None:
        self._pending_alloc -= 1
        if self._done:
            return
        self._make_executor()
        self._sample_pool()
        self._round()
        self._evaluate_provisioner()

    def _release_executor(self, ex_id: int) -> None:
        ex = self.executors.pop(ex_id)
        self.idle.discard(ex_id)
        if ex.cache is not None:
            # The index must stop advertising this executor before the
            # release completes; pending records are applied, not dropped.
            self._apply_index_updates(ex_id)
            self.index.deregister_executor(ex_id)
            for oid in list(self.overlay):
                self._clear_flight(ex_id, oid)
            if self.sc.provisioner.release_cache_policy is ReleaseCachePolicy.RETAIN_UNTIL_REUSE:
                self._retained.append(ex.cache)

    def _sample_pool(self) -> None:
        pool = len(self.executors) + self._pending_alloc
        self.report.record_pool(self.now, pool, len(self.queue))

    # -- main loop -----------------------------------------------------

    def _submit_all(self) -> None:
        for task in self.sc.workload.tasks:
            self.queue.enqueue(task)
        if self.sc.provisioner is not None:
            self._evaluate_provisioner()
        self._sample_pool()
        self._round()

    def run(self) -> MetricsReport:
        size = self.sc.num_executors
        if size is not None:
            for _ in range(size):
                self._make_executor()
        else:
            for _ in range(self.sc.provisioner.min_executors):
                self._make_executor()
        if self.sc.warm_caches:
            self._warm_caches()
        self._sample_pool()

        if self.total_tasks == 0:
            self.report.finalize(0.0)
            return self.report

        self.push(0.0, EventKind.TASK_ARRIVAL, self._submit_all)
        if self.sc.update_interval > 0:
            self.push(self.sc.update_interval, EventKind.INDEX_FLUSH,
                      self._flush_tick)

        heap = self._heap
        while heap:
            when, _, _, callback = heapq.heappop(heap)
            if when < self.now:
                raise SchedulingError("simulated clock moved backwards")
            self.now = when
            callback()
            if self._done:
                break
        if not self._done:
            raise SchedulingError(
                f"event queue drained with {self.total_tasks - self.completed} "
                "tasks incomplete (dispatch stalled)"
            )

        self.report.tasks_completed = self.completed
        self.report.dispatch_decision_stats = {
            "rounds": self._rounds,
            "total_s": self._round_wall,
            "mean_s": self._round_wall / self._rounds if self._rounds else 0.0,
        }
        self.report.finalize(self.now)
        return self.report

    def _log_access(self, run: _TaskRun, oid: str, tier: str) -> None:
        if self.report.access_log is not None:
            self.report.access_log.append((self.now, run.task.id, oid, tier))


def run(scenario: Scenario) -> MetricsReport:
    """Execute one scenario to completion and return its finalized report."""
    return Simulation(scenario).run()
