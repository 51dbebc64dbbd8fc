"""Per-run measurement collection and report export.

A MetricsReport is owned by one simulation run, mutated through the
record_* helpers while the run executes, then frozen by finalize(). Every
field written by the simulation is simulation-deterministic; wall-clock
dispatch-decision timings are kept separate and excluded from exports
unless explicitly requested, so the exported document is byte-identical
across repeated runs of the same scenario.

Data movement is accounted per access: a local hit reads working_size from
local disk; a miss moves transfer_size over the fetch tier (peer or
persistent) and, for caching policies, then reads working_size locally.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .workload import MB

SCHEMA_VERSION = 1

TIER_LOCAL = "local"
TIER_PEER = "peer"
TIER_PERSISTENT = "persistent"
TIERS = (TIER_LOCAL, TIER_PEER, TIER_PERSISTENT)

# Exported scalar columns, in stable order. hit_ratio and
# time_per_task_per_cpu_s are empty when undefined (zero accesses/tasks).
CSV_COLUMNS = (
    "schema_version",
    "tasks_completed",
    "makespan_s",
    "cache_hits_local",
    "cache_hits_peer",
    "cache_misses",
    "hit_ratio",
    "bytes_local",
    "bytes_peer",
    "bytes_persistent",
    "local_mb_per_task",
    "peer_mb_per_task",
    "persistent_mb_per_task",
    "time_per_task_per_cpu_s",
    "peak_pool",
)


@dataclass
class MetricsReport:
    tasks_completed: int = 0
    makespan: float = 0.0
    cache_hits_local: int = 0
    cache_hits_peer: int = 0
    cache_misses: int = 0
    bytes_local: int = 0
    bytes_peer: int = 0
    bytes_persistent: int = 0
    peak_pool: int = 0
    throughput_bucket_s: float = 1.0
    # tier -> bucket index -> bytes delivered in that bucket
    throughput_buckets: dict[str, dict[int, int]] = field(
        default_factory=lambda: {t: {} for t in TIERS}
    )
    pool_size_series: list[tuple[float, int, int]] = field(default_factory=list)
    decision_log: list[tuple] | None = None
    access_log: list[tuple] | None = None
    dispatch_decision_stats: dict | None = None
    finalized: bool = False

    @property
    def total_accesses(self) -> int:
        return self.cache_hits_local + self.cache_hits_peer + self.cache_misses

    # -- recording (engine-facing) ------------------------------------

    def record_access(self, tier: str) -> None:
        if tier == TIER_LOCAL:
            self.cache_hits_local += 1
        elif tier == TIER_PEER:
            self.cache_hits_peer += 1
        else:
            self.cache_misses += 1

    def record_bytes(self, tier: str, nbytes: int, now: float) -> None:
        """Credit delivered bytes to a tier at the delivery instant."""
        if tier == TIER_LOCAL:
            self.bytes_local += nbytes
        elif tier == TIER_PEER:
            self.bytes_peer += nbytes
        else:
            self.bytes_persistent += nbytes
        bucket = int(now // self.throughput_bucket_s)
        buckets = self.throughput_buckets[tier]
        buckets[bucket] = buckets.get(bucket, 0) + nbytes

    def record_pool(self, now: float, pool: int, queue_length: int) -> None:
        self.pool_size_series.append((now, pool, queue_length))
        if pool > self.peak_pool:
            self.peak_pool = pool

    def finalize(self, makespan: float) -> None:
        self.makespan = makespan
        self.finalized = True


# ---------------------------------------------------------------------------
# Derived quantities
# ---------------------------------------------------------------------------

def hit_ratio(report: MetricsReport) -> float | None:
    """(local + peer hits) / accesses; None when there were no accesses."""
    accesses = report.total_accesses
    if accesses == 0:
        return None
    return (report.cache_hits_local + report.cache_hits_peer) / accesses


def per_task_data_movement(report: MetricsReport) -> tuple[float, float, float]:
    """(persistent, peer, local) MB moved per completed task."""
    if report.tasks_completed < 1:
        raise ConfigurationError("per-task data movement needs >= 1 completed task")
    n = report.tasks_completed
    return (
        report.bytes_persistent / MB / n,
        report.bytes_peer / MB / n,
        report.bytes_local / MB / n,
    )


def time_per_task_per_cpu(report: MetricsReport) -> float | None:
    """Makespan normalized by pool size and task count; None for empty runs."""
    if report.tasks_completed == 0:
        return None
    return report.makespan * report.peak_pool / report.tasks_completed


def scalar_row(report: MetricsReport) -> dict:
    ratio = hit_ratio(report)
    n = report.tasks_completed
    return {
        "schema_version": SCHEMA_VERSION,
        "tasks_completed": n,
        "makespan_s": report.makespan,
        "cache_hits_local": report.cache_hits_local,
        "cache_hits_peer": report.cache_hits_peer,
        "cache_misses": report.cache_misses,
        "hit_ratio": ratio,
        "bytes_local": report.bytes_local,
        "bytes_peer": report.bytes_peer,
        "bytes_persistent": report.bytes_persistent,
        "local_mb_per_task": report.bytes_local / MB / n if n else None,
        "peer_mb_per_task": report.bytes_peer / MB / n if n else None,
        "persistent_mb_per_task": report.bytes_persistent / MB / n if n else None,
        "time_per_task_per_cpu_s": time_per_task_per_cpu(report),
        "peak_pool": report.peak_pool,
    }


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def export(report: MetricsReport, fmt: str = "csv", include_timing: bool = False) -> str:
    """Serialize a finalized report; CSV carries the scalar row only, JSON
    additionally carries the throughput and pool-size series."""
    if not report.finalized:
        raise ConfigurationError("cannot export an unfinalized report")
    if fmt == "csv":
        return export_csv_rows([report])
    if fmt == "json":
        doc = scalar_row(report)
        doc["throughput_bucket_s"] = report.throughput_bucket_s
        doc["throughput_series"] = {
            tier: [
                [bucket * report.throughput_bucket_s, nbytes,
                 nbytes * 8 / report.throughput_bucket_s]
                for bucket, nbytes in sorted(report.throughput_buckets[tier].items())
            ]
            for tier in TIERS
        }
        doc["pool_size_series"] = [list(row) for row in report.pool_size_series]
        if report.decision_log is not None:
            doc["decision_log"] = [list(row) for row in report.decision_log]
        if include_timing and report.dispatch_decision_stats is not None:
            doc["dispatch_decision_stats"] = report.dispatch_decision_stats
        return json.dumps(doc, indent=2) + "\n"
    raise ConfigurationError(f"unknown report format {fmt!r} (expected csv or json)")


def export_csv_rows(reports: list[MetricsReport]) -> str:
    """One CSV document, one scalar row per report (sweep-friendly)."""
    for report in reports:
        if not report.finalized:
            raise ConfigurationError("cannot export an unfinalized report")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for report in reports:
        row = scalar_row(report)
        writer.writerow({k: csv_cell(row[k]) for k in CSV_COLUMNS})
    return buf.getvalue()


def csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)  # repr round-trips floats exactly
    return str(value)


def parse_csv(text: str) -> list[dict]:
    """Parse an exported CSV back into typed scalar rows (round-trip check)."""
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row: dict = {}
        for key, cell in raw.items():
            if cell == "":
                row[key] = None
            elif key in ("schema_version", "tasks_completed", "cache_hits_local",
                         "cache_hits_peer", "cache_misses", "bytes_local",
                         "bytes_peer", "bytes_persistent", "peak_pool"):
                row[key] = int(cell)
            else:
                row[key] = float(cell)
        rows.append(row)
    return rows


def parse_json(text: str) -> dict:
    return json.loads(text)
