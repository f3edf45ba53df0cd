"""
Exception hierarchy for the thermoacoustic lab.

Plain argument validation raises ValueError; failures tied to the numerics
or to the hypotheses being checked raise one of the classes below.
"""

from typing import Any, Optional


class TatLabError(Exception):
    """Base class for all lab errors."""


class ConfigError(TatLabError):
    """Configuration text could not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PreconditionError(TatLabError):
    """An operation was called outside its documented preconditions."""


class OutOfDomainError(TatLabError):
    """A query point lies outside the region where a field is defined."""


class GeodesicAccuracyError(TatLabError):
    """Geodesic integration drifted off the unit cosphere."""

    def __init__(self, drift: float, tolerance: float):
        self.drift = drift
        super().__init__(
            f"speed conservation drift {drift:.3e} exceeds {tolerance:.1e}; reduce the step"
        )


class InstabilityError(TatLabError):
    """Time stepping produced non-finite values."""

    def __init__(self, step_index: int):
        self.step_index = step_index
        super().__init__(f"non-finite wave field at step {step_index}")


class EllipticityError(TatLabError):
    """A coefficient required to be non-vanishing vanishes on the support set."""

    def __init__(self, message: str, region: Any = None):
        self.region = region
        super().__init__(message)


class DivergenceError(TatLabError):
    """An iterative reconstruction blew up."""

    def __init__(self, message: str, report: Any = None):
        self.report = report
        super().__init__(message)


class ArrayFormatError(TatLabError):
    """A TAWF array file is malformed."""
