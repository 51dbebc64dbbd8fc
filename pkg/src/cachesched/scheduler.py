"""Dispatcher: the task wait queue and the four dispatch policies.

Policies differ along two axes: whether data location influences executor
choice, and whether a task may wait for a busy executor it has affinity
with. FirstAvailable ignores locations entirely (and its executors do not
cache). FirstCacheAvailable picks executors like FirstAvailable but
attaches location hints. MaxCacheHit sends each task to the executor
caching most of its inputs even if that executor is busy (the task defers
until it frees up). MaxComputeUtil picks the best-overlap executor among
the idle ones only, so it never defers while any executor is idle.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from .errors import SchedulingError
from .workload import Task


class DispatchPolicy(enum.Enum):
    FIRST_AVAILABLE = "first-available"
    FIRST_CACHE_AVAILABLE = "first-cache-available"
    MAX_CACHE_HIT = "max-cache-hit"
    MAX_COMPUTE_UTIL = "max-compute-util"

    @classmethod
    def parse(cls, name: str) -> "DispatchPolicy":
        key = name.strip().lower().replace("_", "-")
        for policy in cls:
            if policy.value == key:
                return policy
        choices = ", ".join(p.value for p in cls)
        raise SchedulingError(f"unknown dispatch policy {name!r} (choose from: {choices})")


@dataclass(frozen=True)
class DispatchDecision:
    """One (task -> executor) assignment with per-object source hints.

    hints maps object id -> ordered executor ids known to hold a copy;
    an empty tuple means fetch from persistent storage. overlap is the
    number of required objects the chosen executor already holds.
    """

    task_id: str
    executor_id: int
    hints: dict[str, tuple[int, ...]] = field(default_factory=dict)
    overlap: int = 0


class WaitQueue:
    """FIFO wait queue; its length drives the provisioning trigger."""

    def __init__(self):
        self._tasks: deque[Task] = deque()
        self.total_enqueued = 0

    def enqueue(self, task: Task) -> int:
        self._tasks.append(task)
        self.total_enqueued += 1
        return len(self._tasks)

    def popleft(self) -> Task:
        return self._tasks.popleft()

    def requeue_front(self, tasks) -> None:
        """Put deferred tasks back ahead of everything else, order preserved."""
        self._tasks.extendleft(reversed(list(tasks)))

    def __len__(self) -> int:
        return len(self._tasks)

    def __bool__(self) -> bool:
        return bool(self._tasks)

    def __iter__(self):
        return iter(self._tasks)


def _overlap(task: Task, executor_id: int, locate, weights) -> int:
    if weights is None:
        return sum(1 for oid in task.required_objects if executor_id in locate(oid))
    return sum(
        weights[oid] for oid in task.required_objects if executor_id in locate(oid)
    )


def _hints(task: Task, locate) -> dict[str, tuple[int, ...]]:
    return {oid: tuple(sorted(locate(oid))) for oid in task.required_objects}


def _best(task: Task, pool: set[int], locate, weights) -> int:
    """Highest-overlap executor in pool, ties by lowest id.

    Only executors holding at least one required object can score above
    zero, so the scan is restricted to those; with no holder in the pool
    the zero-score tie collapses to the lowest id.
    """
    holders: set[int] = set()
    for oid in task.required_objects:
        holders |= locate(oid)
    candidates = sorted(holders & pool)
    if not candidates:
        return min(pool)
    # max() keeps the first of equals, and candidates are sorted by id.
    return max(candidates, key=lambda ex: _overlap(task, ex, locate, weights))


def select(
    policy: DispatchPolicy,
    queue: WaitQueue,
    idle_executors: set[int],
    index,
    all_executors=None,
    weights: dict[str, int] | None = None,
    forced_tasks: set[str] | None = None,
) -> list[DispatchDecision]:
    """Run one scheduling round; returns the decisions, mutating the queue.

    index is anything with locate(object_id) -> set of executor ids; the
    engine passes a view that overlays its in-flight fetches on the
    location index so consecutive tasks needing the same object score the
    executor already fetching it. all_executors is needed only by
    MaxCacheHit (it considers busy executors); it defaults to the idle
    set. weights switches overlap scoring from object count to bytes.
    forced_tasks (MaxCacheHit only) names tasks past their defer bound;
    they fall back to best-idle placement instead of waiting again.

    Deterministic: ties break by lowest executor id, tasks are taken in
    FIFO order, and deferred tasks keep their queue position.
    """
    locate = index.locate
    decisions: list[DispatchDecision] = []

    if policy in (DispatchPolicy.FIRST_AVAILABLE, DispatchPolicy.FIRST_CACHE_AVAILABLE):
        idle = sorted(idle_executors)
        while queue and idle:
            task = queue.popleft()
            executor = idle.pop(0)
            if policy is DispatchPolicy.FIRST_AVAILABLE:
                hints = {oid: () for oid in task.required_objects}
                score = 0
            else:
                hints = _hints(task, locate)
                score = _overlap(task, executor, locate, weights)
            decisions.append(DispatchDecision(task.id, executor, hints, score))
        return decisions

    if policy is DispatchPolicy.MAX_COMPUTE_UTIL:
        idle = set(idle_executors)
        while queue and idle:
            task = queue.popleft()
            best = _best(task, idle, locate, weights)
            decisions.append(DispatchDecision(
                task.id, best, _hints(task, locate),
                _overlap(task, best, locate, weights),
            ))
            idle.remove(best)
        return decisions

    # MaxCacheHit: single pass over the whole queue; a task whose best
    # executor is busy defers in place rather than settling for less.
    pool = set(all_executors) if all_executors is not None else set(idle_executors)
    if not pool:
        return decisions
    idle = set(idle_executors)
    deferred: list[Task] = []
    while queue:
        task = queue.popleft()
        if forced_tasks and task.id in forced_tasks and idle:
            best = _best(task, idle, locate, weights)
        else:
            best = _best(task, pool, locate, weights)
        if best in idle:
            decisions.append(DispatchDecision(
                task.id, best, _hints(task, locate),
                _overlap(task, best, locate, weights),
            ))
            idle.remove(best)
        else:
            deferred.append(task)
    queue.requeue_front(deferred)
    return decisions
