"""Data-aware task scheduling and cooperative-cache cluster simulation.

A deterministic discrete-event simulator of a dispatcher/executor compute
framework in which executors cache data objects on local disk, serve them
to peers, and are chosen by data-aware dispatch policies; a shared
persistent store with a saturation knee backs everything. Includes the
workload generator, the centralized location index and its
microbenchmark, queue-triggered provisioning, metrics reporting, and a
scenario-file CLI.
"""

from .cache import CacheConfig, CacheEntry, EvictionPolicy, ExecutorCache
from .engine import (
    GBPS,
    EventKind,
    ResourceModel,
    Scenario,
    Simulation,
    run,
    shared_bandwidth_share,
)
from .errors import (
    AdmissionError,
    CacheschedError,
    ConfigurationError,
    SchedulingError,
)
from .index import (
    LocationIndex,
    MicrobenchResult,
    RemoteLookupModel,
    index_microbench,
)
from .metrics import (
    MetricsReport,
    export,
    hit_ratio,
    per_task_data_movement,
    time_per_task_per_cpu,
)
from .provisioner import (
    Allocate,
    AllocationMode,
    ProvisionerConfig,
    Release,
    ReleaseCachePolicy,
    provision_evaluate,
)
from .scenario import list_presets, load_preset, load_scenario, scenario_from_dict
from .scheduler import DispatchDecision, DispatchPolicy, WaitQueue, select
from .workload import (
    MB,
    DataObject,
    Task,
    Workload,
    generate_locality_workload,
    ideal_cache_hit_ratio,
    read_trace,
    save_trace,
    table2_presets,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissionError",
    "Allocate",
    "AllocationMode",
    "CacheConfig",
    "CacheEntry",
    "CacheschedError",
    "ConfigurationError",
    "DataObject",
    "DispatchDecision",
    "DispatchPolicy",
    "EventKind",
    "EvictionPolicy",
    "ExecutorCache",
    "GBPS",
    "LocationIndex",
    "MB",
    "MetricsReport",
    "MicrobenchResult",
    "ProvisionerConfig",
    "Release",
    "ReleaseCachePolicy",
    "RemoteLookupModel",
    "ResourceModel",
    "Scenario",
    "SchedulingError",
    "Simulation",
    "Task",
    "WaitQueue",
    "Workload",
    "export",
    "generate_locality_workload",
    "hit_ratio",
    "ideal_cache_hit_ratio",
    "index_microbench",
    "list_presets",
    "load_preset",
    "load_scenario",
    "per_task_data_movement",
    "provision_evaluate",
    "read_trace",
    "run",
    "save_trace",
    "scenario_from_dict",
    "select",
    "shared_bandwidth_share",
    "table2_presets",
    "time_per_task_per_cpu",
]
