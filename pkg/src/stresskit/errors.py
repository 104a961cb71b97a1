"""Error types shared across the toolkit.

Data problems (a bad sample) are reported as violation lists, not
exceptions; these classes cover genuine failures.
"""


class StressKitError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(StressKitError):
    """Invalid or inconsistent configuration (unknown predicate, empty catalog, ...)."""


class PreconditionError(StressKitError):
    """An operation was called with inputs that violate its stated preconditions."""


class DataError(StressKitError):
    """Input data is structurally unusable (invalid sample, undecodable audio)."""


class TransportError(StressKitError):
    """A backend could not be reached after exhausting retries."""


class GenerationParseError(StressKitError):
    """A backend reply could not be parsed into the expected structure after retries."""


class CapacityError(StressKitError):
    """Not enough material to satisfy a request (e.g. rehearsal duration shortfall)."""

    def __init__(self, message: str, shortfall_s: float = 0.0):
        super().__init__(message)
        self.shortfall_s = shortfall_s


class UndefinedMetricError(StressKitError):
    """A metric is undefined for the given input (empty set, zero variance)."""


class StageOrderError(StressKitError):
    """A pipeline stage was run before the stage that produces its input."""

    def __init__(self, message: str, missing_artifact: str = ""):
        super().__init__(message)
        self.missing_artifact = missing_artifact
