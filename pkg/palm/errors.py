class PalmError(Exception):
    """Base class for errors raised by the package."""


class NumericDomainError(PalmError, ValueError):
    """Non-finite or otherwise invalid numeric input."""


class DimensionMismatchError(PalmError, ValueError):
    def __init__(self, message: str, k: int | None = None):
        super().__init__(message if k is None else f"sample {k}: {message}")
        self.k = k


class EmptyRuleBaseError(PalmError):
    def __init__(self, message: str = "rule base is empty; grow the first rule before inference"):
        super().__init__(message)


class DegenerateRuleError(PalmError, ValueError):
    """A rule's weight vector has zero norm where a direction is required."""


class SnapshotError(PalmError):
    """Snapshot payload is corrupt or does not match the requested config."""


class DatasetError(PalmError):
    """Dataset file or spec cannot produce the requested stream."""


class MetricsError(PalmError, ValueError):
    """Metric is undefined for the given predictions/targets."""


class ConfigError(PalmError, ValueError):
    """Run or model configuration is invalid."""
