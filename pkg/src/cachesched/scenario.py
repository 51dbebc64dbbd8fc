"""Scenario files: versioned YAML schema, strict validation, shipped presets.

A scenario file fully specifies a reproducible run. Sizes are given in MB
(decimal, 1 MB = 1e6 bytes) and bandwidths in Gb/s; internally everything
becomes bytes and bytes/second. Unknown keys are rejected so typos fail
loudly instead of silently falling back to defaults.
"""

from __future__ import annotations

from dataclasses import replace
from importlib import resources
from pathlib import Path

import yaml

from .cache import CacheConfig, EvictionPolicy
from .engine import ResourceModel, Scenario
from .errors import ConfigurationError
from .provisioner import AllocationMode, ProvisionerConfig, ReleaseCachePolicy
from .scheduler import DispatchPolicy
from .workload import (
    MB,
    WORKLOAD_PRESET_ROWS,
    Workload,
    generate_locality_workload,
    read_trace,
)

SCHEMA = "cachesched-scenario-v1"


def _reject_unknown(doc: dict, known: set[str], where: str) -> None:
    extra = sorted(set(doc) - known)
    if extra:
        raise ConfigurationError(f"{where}: unknown keys {extra}")


def _get(doc: dict, key: str, kind, where: str, default=None, required=False):
    if key not in doc or doc[key] is None:
        if required:
            raise ConfigurationError(f"{where}: missing required key {key!r}")
        return default
    value = doc[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigurationError(
            f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _mb_to_bytes(value: float) -> int:
    return int(round(value * MB))


def _workload_from_dict(doc: dict, base_dir: Path | None, default_seed: int) -> Workload:
    where = "workload"
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{where}: expected a mapping")
    _reject_unknown(doc, {
        "table2_locality", "num_objects", "locality", "trace", "size_preset",
        "transfer_size_mb", "working_size_mb", "compute_time_s", "seed",
    }, where)

    trace = _get(doc, "trace", str, where)
    table2 = _get(doc, "table2_locality", (int, float), where)
    num_objects = _get(doc, "num_objects", int, where)
    modes = sum(x is not None for x in (trace, table2, num_objects))
    if modes != 1:
        raise ConfigurationError(
            f"{where}: exactly one of trace, table2_locality, num_objects required"
        )

    if trace is not None:
        path = Path(trace)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return read_trace(path)

    size_preset = _get(doc, "size_preset", str, where)
    transfer_mb = _get(doc, "transfer_size_mb", (int, float), where)
    working_mb = _get(doc, "working_size_mb", (int, float), where)
    explicit_sizes = transfer_mb is not None or working_mb is not None
    if size_preset is None:
        size_preset = "custom" if explicit_sizes else "gz"
    elif size_preset != "custom" and explicit_sizes:
        raise ConfigurationError(
            f"{where}: transfer_size_mb/working_size_mb require size_preset custom"
        )
    compute = _get(doc, "compute_time_s", (int, float), where, default=0.1)
    seed = _get(doc, "seed", int, where, default=default_seed)

    if table2 is not None:
        wanted = float(table2)
        for row_locality, num_tasks, num_files in WORKLOAD_PRESET_ROWS:
            if abs(row_locality - wanted) < 1e-9:
                num_objects = num_files
                # The row's nominal locality is a label; the exact ratio
                # reproduces the row's task count.
                locality = num_tasks / num_files
                break
        else:
            known = [row[0] for row in WORKLOAD_PRESET_ROWS]
            raise ConfigurationError(
                f"{where}.table2_locality: {wanted} is not one of {known}"
            )
    else:
        locality = float(_get(doc, "locality", (int, float), where, required=True))

    return generate_locality_workload(
        num_objects=num_objects,
        locality=locality,
        size_preset=size_preset,
        seed=seed,
        transfer_size=_mb_to_bytes(transfer_mb) if transfer_mb is not None else None,
        working_size=_mb_to_bytes(working_mb) if working_mb is not None else None,
        compute_time=float(compute),
    )


def _provisioner_from_dict(doc: dict) -> ProvisionerConfig:
    where = "executors.provisioner"
    _reject_unknown(doc, {
        "min", "max", "trigger_queue_length", "allocation_mode",
        "startup_delay_s", "idle_timeout_s", "release_cache_policy",
    }, where)
    return ProvisionerConfig(
        min_executors=_get(doc, "min", int, where, required=True),
        max_executors=_get(doc, "max", int, where, required=True),
        trigger_queue_length=_get(doc, "trigger_queue_length", int, where, default=1),
        allocation_mode=AllocationMode.parse(
            _get(doc, "allocation_mode", str, where, default="one-at-a-time")
        ),
        startup_delay=float(_get(doc, "startup_delay_s", (int, float), where, default=60.0)),
        idle_timeout=float(_get(doc, "idle_timeout_s", (int, float), where, default=60.0)),
        release_cache_policy=ReleaseCachePolicy.parse(
            _get(doc, "release_cache_policy", str, where, default="discard")
        ),
    )


def scenario_from_dict(doc: dict, base_dir: Path | None = None) -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigurationError("scenario document must be a mapping")
    schema = doc.get("schema")
    if schema != SCHEMA:
        raise ConfigurationError(
            f"schema: expected {SCHEMA!r}, got {schema!r}"
        )
    _reject_unknown(doc, {
        "schema", "description", "workload", "executors", "cache", "dispatch",
        "resources", "index", "warm_caches", "seed", "task_overhead_s",
        "byte_weighted_scoring", "max_defer_rounds", "throughput_bucket_s",
    }, "scenario")

    seed = _get(doc, "seed", int, "scenario", default=0)
    workload = _workload_from_dict(
        _get(doc, "workload", dict, "scenario", required=True), base_dir, seed
    )

    ex_doc = _get(doc, "executors", dict, "scenario", required=True)
    _reject_unknown(ex_doc, {"count", "provisioner"}, "executors")
    count = _get(ex_doc, "count", int, "executors")
    prov_doc = _get(ex_doc, "provisioner", dict, "executors")
    if (count is None) == (prov_doc is None):
        raise ConfigurationError("executors: exactly one of count, provisioner required")
    provisioner = _provisioner_from_dict(prov_doc) if prov_doc is not None else None

    cache = None
    cache_doc = _get(doc, "cache", dict, "scenario")
    if cache_doc is not None:
        _reject_unknown(cache_doc, {"capacity_mb", "policy", "seed"}, "cache")
        cache = CacheConfig(
            capacity=_mb_to_bytes(
                _get(cache_doc, "capacity_mb", (int, float), "cache", required=True)
            ),
            policy=EvictionPolicy.parse(
                _get(cache_doc, "policy", str, "cache", default="lru")
            ),
            seed=_get(cache_doc, "seed", int, "cache", default=seed),
        )

    res_doc = _get(doc, "resources", dict, "scenario", default={})
    _reject_unknown(res_doc, {
        "persistent_read_gbps", "persistent_rw_gbps", "io_servers",
        "local_disk_gbps", "peer_net_gbps", "per_transfer_latency_s",
    }, "resources")
    defaults = ResourceModel()
    resources_model = ResourceModel(
        persistent_read_gbps=float(_get(
            res_doc, "persistent_read_gbps", (int, float), "resources",
            default=defaults.persistent_read_gbps)),
        persistent_rw_gbps=float(_get(
            res_doc, "persistent_rw_gbps", (int, float), "resources",
            default=defaults.persistent_rw_gbps)),
        persistent_io_servers=_get(
            res_doc, "io_servers", int, "resources",
            default=defaults.persistent_io_servers),
        local_disk_gbps=float(_get(
            res_doc, "local_disk_gbps", (int, float), "resources",
            default=defaults.local_disk_gbps)),
        peer_net_gbps=float(_get(
            res_doc, "peer_net_gbps", (int, float), "resources",
            default=defaults.peer_net_gbps)),
        per_transfer_latency_s=float(_get(
            res_doc, "per_transfer_latency_s", (int, float), "resources",
            default=defaults.per_transfer_latency_s)),
    )

    index_doc = _get(doc, "index", dict, "scenario", default={})
    _reject_unknown(index_doc, {"update_interval_s"}, "index")
    update_interval = float(_get(
        index_doc, "update_interval_s", (int, float), "index", default=1.0
    ))

    scenario = Scenario(
        workload=workload,
        dispatch=DispatchPolicy.parse(
            _get(doc, "dispatch", str, "scenario", default="max-compute-util")
        ),
        num_executors=count,
        provisioner=provisioner,
        cache=cache,
        resources=resources_model,
        update_interval=update_interval,
        warm_caches=_get(doc, "warm_caches", bool, "scenario", default=False),
        seed=seed,
        task_overhead_s=float(_get(
            doc, "task_overhead_s", (int, float), "scenario", default=0.0)),
        byte_weighted_scoring=_get(
            doc, "byte_weighted_scoring", bool, "scenario", default=False),
        max_defer_rounds=_get(doc, "max_defer_rounds", int, "scenario"),
        throughput_bucket_s=float(_get(
            doc, "throughput_bucket_s", (int, float), "scenario", default=1.0)),
    )
    scenario.validate()
    return scenario


def load_scenario(path) -> Scenario:
    """Parse and validate one scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"{path}: {exc.strerror or exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigurationError(f"{path}: invalid YAML{at}: {exc}") from exc
    try:
        return scenario_from_dict(doc, base_dir=path.parent)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Shipped presets
# ---------------------------------------------------------------------------

def _preset_root():
    return resources.files("cachesched") / "presets"


def list_presets() -> list[tuple[str, str]]:
    """(name, description) for every shipped preset, sorted by name."""
    found = []
    for entry in _preset_root().iterdir():
        if entry.name.endswith(".yaml"):
            doc = yaml.safe_load(entry.read_text())
            found.append((entry.name[:-5], doc.get("description", "")))
    return sorted(found)


def preset_text(name: str) -> str:
    entry = _preset_root() / f"{name}.yaml"
    try:
        return entry.read_text()
    except (FileNotFoundError, OSError):
        known = ", ".join(n for n, _ in list_presets())
        raise ConfigurationError(
            f"unknown preset {name!r} (available: {known})"
        ) from None


def load_preset(name: str, seed: int | None = None) -> Scenario:
    """Load a shipped preset by name, optionally overriding the seed."""
    doc = yaml.safe_load(preset_text(name))
    if seed is not None:
        doc["seed"] = seed
    try:
        return scenario_from_dict(doc)
    except ConfigurationError as exc:
        raise ConfigurationError(f"preset {name}: {exc}") from exc
