"""Dispatch policies checked against brute-force oracles.

The oracles re-derive each policy's choices from scratch (whole-pool
scans, explicit tie rules) so the tests do not mirror the production
shortcuts such as restricting the scan to holders.
"""

import random

import pytest

from cachesched import (
    DispatchDecision,
    DispatchPolicy,
    SchedulingError,
    Task,
    WaitQueue,
    select,
)


class DictIndex:
    """Minimal locate() provider: executor id -> set of object ids."""

    def __init__(self, holdings):
        self.holdings = holdings

    def locate(self, object_id):
        return {ex for ex, held in self.holdings.items() if object_id in held}


def oracle_score(task, executor, holdings, weights):
    held = holdings.get(executor, set())
    score = 0
    for oid in task.required_objects:
        if oid in held:
            score += 1 if weights is None else weights[oid]
    return score


def oracle_best(task, pool, holdings, weights):
    """Full scan of pool in id order; strict > keeps the lowest id on ties."""
    best_ex, best_score = None, -1
    for ex in sorted(pool):
        score = oracle_score(task, ex, holdings, weights)
        if score > best_score:
            best_ex, best_score = ex, score
    return best_ex, best_score


def oracle_hints(task, holdings):
    return {
        oid: tuple(sorted(ex for ex, held in holdings.items() if oid in held))
        for oid in task.required_objects
    }


def oracle_first(tasks, idle, holdings, weights, with_hints):
    expected = []
    for task, ex in zip(tasks, sorted(idle)):
        if with_hints:
            hints = oracle_hints(task, holdings)
            score = oracle_score(task, ex, holdings, weights)
        else:
            hints = {oid: () for oid in task.required_objects}
            score = 0
        expected.append(DispatchDecision(task.id, ex, hints, score))
    return expected, [t.id for t in tasks[min(len(tasks), len(idle)):]]


def oracle_mcu(tasks, idle0, holdings, weights):
    idle = set(idle0)
    expected = []
    taken = 0
    for task in tasks:
        if not idle:
            break
        ex, score = oracle_best(task, idle, holdings, weights)
        expected.append(
            DispatchDecision(task.id, ex, oracle_hints(task, holdings), score)
        )
        idle.discard(ex)
        taken += 1
    return expected, [t.id for t in tasks[taken:]]


def oracle_mch(tasks, idle0, pool, holdings, weights, forced):
    idle = set(idle0)
    expected, deferred = [], []
    for task in tasks:
        if task.id in forced and idle:
            ex, score = oracle_best(task, idle, holdings, weights)
        else:
            ex, score = oracle_best(task, pool, holdings, weights)
        if ex in idle:
            expected.append(
                DispatchDecision(task.id, ex, oracle_hints(task, holdings), score)
            )
            idle.discard(ex)
        else:
            deferred.append(task.id)
    return expected, deferred


def build_queue(tasks):
    queue = WaitQueue()
    for task in tasks:
        queue.enqueue(task)
    return queue


def random_instance(rng):
    objects = [f"o{i}" for i in range(rng.randint(4, 12))]
    executors = list(range(rng.randint(1, 6)))
    holdings = {
        ex: set(rng.sample(objects, rng.randint(0, len(objects))))
        for ex in executors
    }
    tasks = [
        Task(f"t{i}", tuple(rng.sample(objects, rng.randint(1, 3))), 1.0)
        for i in range(rng.randint(1, 8))
    ]
    idle = set(rng.sample(executors, rng.randint(0, len(executors))))
    weights = {oid: rng.randint(1, 9) * 1000 for oid in objects}
    return objects, executors, holdings, tasks, idle, weights


def test_policies_match_oracle_over_random_instances():
    rng = random.Random(4242)
    mch_deferrals = 0
    for trial in range(120):
        _, executors, holdings, tasks, idle, weights = random_instance(rng)
        index = DictIndex(holdings)
        use_weights = weights if trial % 3 == 0 else None
        forced = {t.id for t in tasks if rng.random() < 0.2}

        for policy, oracle in (
            (DispatchPolicy.FIRST_AVAILABLE, None),
            (DispatchPolicy.FIRST_CACHE_AVAILABLE, None),
            (DispatchPolicy.MAX_COMPUTE_UTIL, None),
            (DispatchPolicy.MAX_CACHE_HIT, None),
        ):
            queue = build_queue(tasks)
            if policy is DispatchPolicy.MAX_CACHE_HIT:
                got = select(
                    policy, queue, set(idle), index,
                    all_executors=executors, weights=use_weights,
                    forced_tasks=forced,
                )
                want, leftover = oracle_mch(
                    tasks, idle, set(executors), holdings, use_weights, forced
                )
                mch_deferrals += len(leftover)
            elif policy is DispatchPolicy.MAX_COMPUTE_UTIL:
                got = select(policy, queue, set(idle), index, weights=use_weights)
                want, leftover = oracle_mcu(tasks, idle, holdings, use_weights)
            else:
                got = select(policy, queue, set(idle), index, weights=use_weights)
                want, leftover = oracle_first(
                    tasks, idle, holdings, use_weights,
                    policy is DispatchPolicy.FIRST_CACHE_AVAILABLE,
                )
            assert got == want, f"trial {trial}, {policy}"
            assert [t.id for t in queue] == leftover, f"trial {trial}, {policy}"
    # the fuzz exercised the defer path, not just happy dispatches
    assert mch_deferrals > 50


def test_first_available_ignores_the_index():
    tasks = [Task("t0", ("a", "b"), 1.0)]
    loaded = DictIndex({0: {"a", "b"}, 1: {"a"}})
    empty = DictIndex({})
    got_loaded = select(
        DispatchPolicy.FIRST_AVAILABLE, build_queue(tasks), {0, 1}, loaded
    )
    got_empty = select(
        DispatchPolicy.FIRST_AVAILABLE, build_queue(tasks), {0, 1}, empty
    )
    assert got_loaded == got_empty
    assert got_loaded[0].hints == {"a": (), "b": ()}
    assert got_loaded[0].overlap == 0


def test_first_cache_available_takes_lowest_idle_but_hints_at_holders():
    # executor 1 holds everything, yet the task goes to idle executor 0
    index = DictIndex({1: {"a", "b"}})
    queue = build_queue([Task("t0", ("a", "b"), 1.0)])
    (decision,) = select(DispatchPolicy.FIRST_CACHE_AVAILABLE, queue, {0, 1}, index)
    assert decision.executor_id == 0
    assert decision.overlap == 0
    assert decision.hints == {"a": (1,), "b": (1,)}


def test_max_compute_util_never_defers_while_idle_exists():
    index = DictIndex({2: {"a"}})
    tasks = [Task("t0", ("a",), 1.0), Task("t1", ("a",), 1.0)]
    queue = build_queue(tasks)
    decisions = select(DispatchPolicy.MAX_COMPUTE_UTIL, queue, {0, 1}, index)
    # the holder (2) is busy; both tasks still run, on the idle pair
    assert [d.executor_id for d in decisions] == [0, 1]
    assert [d.overlap for d in decisions] == [0, 0]
    assert len(queue) == 0


def test_max_cache_hit_defers_for_the_busy_holder():
    index = DictIndex({1: {"a"}})
    task = Task("t0", ("a",), 1.0)
    queue = build_queue([task])
    decisions = select(
        DispatchPolicy.MAX_CACHE_HIT, queue, {0}, index, all_executors=[0, 1]
    )
    assert decisions == []
    assert [t.id for t in queue] == ["t0"]  # still waiting, position kept

    # past its defer bound the task settles for the best idle executor
    queue = build_queue([task])
    (decision,) = select(
        DispatchPolicy.MAX_CACHE_HIT, queue, {0}, index,
        all_executors=[0, 1], forced_tasks={"t0"},
    )
    assert decision.executor_id == 0
    assert decision.overlap == 0


def test_max_cache_hit_requeues_deferred_in_fifo_order():
    index = DictIndex({5: {"a"}, 0: {"b"}})
    tasks = [
        Task("t0", ("a",), 1.0),  # wants busy 5 -> defers
        Task("t1", ("b",), 1.0),  # wants idle 0 -> dispatches
        Task("t2", ("a",), 1.0),  # wants busy 5 -> defers
    ]
    queue = build_queue(tasks)
    decisions = select(
        DispatchPolicy.MAX_CACHE_HIT, queue, {0}, index, all_executors=[0, 5]
    )
    assert [d.task_id for d in decisions] == ["t1"]
    assert [t.id for t in queue] == ["t0", "t2"]


def test_max_cache_hit_with_empty_pool_leaves_queue_alone():
    queue = build_queue([Task("t0", ("a",), 1.0)])
    decisions = select(
        DispatchPolicy.MAX_CACHE_HIT, queue, set(), DictIndex({}), all_executors=[]
    )
    assert decisions == []
    assert len(queue) == 1


def test_byte_weights_flip_the_choice():
    # count-wise a tie (one object each side); byte-wise executor 1 wins
    index = DictIndex({0: {"small"}, 1: {"big"}})
    task = Task("t0", ("small", "big"), 1.0)
    weights = {"small": 1_000_000, "big": 8_000_000}

    (unweighted,) = select(
        DispatchPolicy.MAX_COMPUTE_UTIL, build_queue([task]), {0, 1}, index
    )
    assert unweighted.executor_id == 0  # tie broken by lowest id
    assert unweighted.overlap == 1

    (weighted,) = select(
        DispatchPolicy.MAX_COMPUTE_UTIL, build_queue([task]), {0, 1}, index,
        weights=weights,
    )
    assert weighted.executor_id == 1
    assert weighted.overlap == 8_000_000


def test_wait_queue_contract():
    queue = WaitQueue()
    assert not queue
    a, b, c = (Task(t, ("x",), 1.0) for t in ("a", "b", "c"))
    assert queue.enqueue(a) == 1
    assert queue.enqueue(b) == 2
    assert queue.total_enqueued == 2
    assert queue.popleft() is a
    queue.requeue_front([a, c])
    assert [t.id for t in queue] == ["a", "c", "b"]
    assert queue.total_enqueued == 2  # requeue is not a new arrival
    assert bool(queue)


def test_policy_parse():
    assert DispatchPolicy.parse("max_cache_hit") is DispatchPolicy.MAX_CACHE_HIT
    assert DispatchPolicy.parse(" First-Available ") is DispatchPolicy.FIRST_AVAILABLE
    with pytest.raises(SchedulingError, match="first-cache-available"):
        DispatchPolicy.parse("round-robin")
