"""Exception types shared across the package."""


class MoboaError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MoboaError):
    """Invalid or inconsistent configuration (pool documents, run configs, CLI flags)."""


class SchemaError(ConfigError):
    """A document does not match its declared schema (missing fields, bad kinds)."""


class DimensionError(MoboaError, ValueError):
    """A vector or matrix has the wrong length or shape."""


class DomainError(MoboaError, ValueError):
    """A value is outside its documented domain (e.g. unit-interval violation)."""


class NumericalError(MoboaError):
    """A numerical routine failed after exhausting its robustness measures."""


class EvaluationError(MoboaError):
    """A black-box evaluation failed. ``payload`` carries the raw offending data."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class TabularLookupError(EvaluationError):
    """A team is not present in a tabular replay source."""


class HistoryError(MoboaError):
    """A run history file is missing, corrupt, or inconsistent with its config."""
