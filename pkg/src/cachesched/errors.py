"""Exception types shared across the package."""


class CacheschedError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CacheschedError):
    """Invalid workload, scenario, or policy configuration."""


class AdmissionError(CacheschedError):
    """Object cannot be admitted to a cache (larger than capacity)."""


class SchedulingError(CacheschedError):
    """Internal inconsistency in scheduler or engine state."""
