"""Queue-triggered executor allocation and idle-timeout release.

The provisioner is a pure policy function: given the wait-queue length and
the pool state it returns Allocate/Release actions, and the engine applies
them (startup delay included). All acceptance scenarios run static pools
(min == max); the dynamic modes are exercised by property tests.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ConfigurationError


class AllocationMode(enum.Enum):
    ONE_AT_A_TIME = "one-at-a-time"
    ALL_AT_ONCE = "all-at-once"
    EXPONENTIAL = "exponential"

    @classmethod
    def parse(cls, name: str) -> "AllocationMode":
        key = name.strip().lower().replace("_", "-")
        for mode in cls:
            if mode.value == key:
                return mode
        choices = ", ".join(m.value for m in cls)
        raise ConfigurationError(f"unknown allocation mode {name!r} (choose from: {choices})")


class ReleaseCachePolicy(enum.Enum):
    DISCARD = "discard"
    RETAIN_UNTIL_REUSE = "retain-until-reuse"

    @classmethod
    def parse(cls, name: str) -> "ReleaseCachePolicy":
        key = name.strip().lower().replace("_", "-")
        for policy in cls:
            if policy.value == key:
                return policy
        choices = ", ".join(p.value for p in cls)
        raise ConfigurationError(f"unknown release cache policy {name!r} (choose from: {choices})")


@dataclass(frozen=True)
class ProvisionerConfig:
    min_executors: int
    max_executors: int
    trigger_queue_length: int = 1
    allocation_mode: AllocationMode = AllocationMode.ONE_AT_A_TIME
    startup_delay: float = 60.0
    idle_timeout: float = 60.0
    release_cache_policy: ReleaseCachePolicy = ReleaseCachePolicy.DISCARD

    def __post_init__(self):
        if self.min_executors < 0:
            raise ConfigurationError("min_executors must be >= 0")
        if self.max_executors < 1:
            raise ConfigurationError("max_executors must be >= 1")
        if self.min_executors > self.max_executors:
            raise ConfigurationError(
                f"min_executors ({self.min_executors}) > max_executors ({self.max_executors})"
            )
        if self.trigger_queue_length < 1:
            raise ConfigurationError("trigger_queue_length must be >= 1")
        if self.startup_delay < 0:
            raise ConfigurationError("startup_delay must be >= 0")
        if self.idle_timeout <= 0:
            raise ConfigurationError("idle_timeout must be > 0")

    @classmethod
    def static_pool(cls, size: int) -> "ProvisionerConfig":
        return cls(min_executors=size, max_executors=size)


@dataclass(frozen=True)
class Allocate:
    count: int


@dataclass(frozen=True)
class Release:
    executor_ids: tuple[int, ...]


def allocation_count(mode: AllocationMode, pool: int, max_executors: int) -> int:
    """Executors to add this step, before the max cap: 1, fill, or double."""
    if mode is AllocationMode.ONE_AT_A_TIME:
        want = 1
    elif mode is AllocationMode.ALL_AT_ONCE:
        want = max_executors - pool
    else:
        want = max(1, pool)
    return min(want, max_executors - pool)


def provision_evaluate(
    config: ProvisionerConfig,
    queue_length: int,
    executors,
    now: float,
    pending_allocations: int = 0,
) -> list:
    """One provisioning decision.

    executors is the live pool: objects with id, busy, and idle_since
    (None while busy). pending_allocations counts executors already
    allocated but still inside their startup delay; they count toward the
    pool so allocation never overshoots max.
    """
    pool = len(executors) + pending_allocations
    actions: list = []

    if queue_length >= config.trigger_queue_length and pool < config.max_executors:
        count = allocation_count(config.allocation_mode, pool, config.max_executors)
        if count > 0:
            actions.append(Allocate(count))
        return actions  # growing and shrinking in one step would thrash

    releasable = sorted(
        (ex for ex in executors
         if not ex.busy and ex.idle_since is not None
         and now - ex.idle_since >= config.idle_timeout),
        key=lambda ex: (ex.idle_since, ex.id),
    )
    allowed = pool - config.min_executors
    if allowed > 0 and releasable:
        victims = tuple(ex.id for ex in releasable[:allowed])
        actions.append(Release(victims))
    return actions
