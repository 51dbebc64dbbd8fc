"""Per-executor object cache: capacity accounting plus four eviction policies.

Objects are cached whole (no partial entries) and never mutated after
creation, so there is no coherence protocol — just admission, lookup
bookkeeping, and victim selection. Victim scans are O(entries); caches at
the scales simulated here hold a few thousand entries and evict rarely.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

from .errors import AdmissionError, ConfigurationError, SchedulingError
from .workload import DataObject


class EvictionPolicy(enum.Enum):
    RANDOM = "random"
    FIFO = "fifo"
    LRU = "lru"
    LFU = "lfu"

    @classmethod
    def parse(cls, name: str) -> "EvictionPolicy":
        try:
            return cls(name.lower())
        except ValueError:
            raise ConfigurationError(
                f"unknown eviction policy {name!r} "
                f"(expected one of {[p.value for p in cls]})"
            ) from None


@dataclass(frozen=True)
class CacheConfig:
    capacity: int
    policy: EvictionPolicy = EvictionPolicy.LRU
    seed: int = 0  # used by the random policy only

    def __post_init__(self):
        # accept the policy by name too; a raw string must never reach
        # _pick_victim, whose identity chain would misread it
        if not isinstance(self.policy, EvictionPolicy):
            object.__setattr__(self, "policy", EvictionPolicy.parse(self.policy))
        if self.capacity < 1:
            raise ConfigurationError(f"cache capacity must be >= 1, got {self.capacity}")


@dataclass
class CacheEntry:
    working_size: int
    insert_seq: int
    last_access_seq: int
    access_count: int = 0


class ExecutorCache:
    """One executor's cache. Owned by exactly one executor; no concurrent mutation."""

    def __init__(self, config: CacheConfig):
        self.config = config
        self.entries: dict[str, CacheEntry] = {}
        self.used = 0
        self._seq = 0
        self._rng = random.Random(config.seed)

    def __contains__(self, object_id: str) -> bool:
        # Membership probe for the scheduler/engine: must not touch
        # recency or frequency state.
        return object_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def contents(self):
        return self.entries.keys()

    def lookup(self, object_id: str) -> bool:
        """Access an object: True on hit (recency/frequency updated), False on miss."""
        entry = self.entries.get(object_id)
        if entry is None:
            return False
        self._seq += 1
        entry.last_access_seq = self._seq
        entry.access_count += 1
        return True

    def insert(self, obj: DataObject) -> list[str]:
        """Make obj resident, evicting per policy until it fits. Returns evicted ids."""
        if obj.working_size > self.config.capacity:
            raise AdmissionError(
                f"object {obj.id!r} ({obj.working_size}B) exceeds cache capacity "
                f"({self.config.capacity}B)"
            )
        if obj.id in self.entries:
            raise SchedulingError(f"object {obj.id!r} inserted twice")
        evicted = []
        while self.used + obj.working_size > self.config.capacity:
            victim = self._pick_victim()
            evicted.append(victim)
            self._remove(victim)
        self._seq += 1
        self.entries[obj.id] = CacheEntry(
            working_size=obj.working_size, insert_seq=self._seq, last_access_seq=self._seq
        )
        self.used += obj.working_size
        return evicted

    def remove(self, object_id: str) -> None:
        """Drop an entry outright (release/discard path), no policy involved."""
        if object_id in self.entries:
            self._remove(object_id)

    def _remove(self, object_id: str) -> None:
        self.used -= self.entries.pop(object_id).working_size

    def _pick_victim(self) -> str:
        policy = self.config.policy
        if policy is EvictionPolicy.RANDOM:
            # dict order is insertion order, deterministic for a given
            # operation sequence, so a seeded index pick is reproducible.
            return list(self.entries)[self._rng.randrange(len(self.entries))]
        if policy is EvictionPolicy.FIFO:
            key = lambda item: item[1].insert_seq
        elif policy is EvictionPolicy.LRU:
            key = lambda item: item[1].last_access_seq
        else:  # LFU, ties broken by least recent access
            key = lambda item: (item[1].access_count, item[1].last_access_seq)
        return min(self.entries.items(), key=key)[0]
