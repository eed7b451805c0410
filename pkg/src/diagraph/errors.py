"""Exception types shared across the package."""

from __future__ import annotations


class DiagraphError(Exception):
    """Base class for all package-specific errors."""


class DegenerateGeometry(DiagraphError):
    """Raised when an input shape has no usable extent (zero area, collapsed points)."""


class NonConvexInput(DiagraphError):
    """Raised when a polygon operation requires convexity and the input is not convex."""


class ConfigError(DiagraphError):
    """Raised for invalid synthesis or noise configuration values."""


class LayoutError(DiagraphError):
    """Raised when no collision-free placement could be produced for a topology."""


class ParseError(DiagraphError):
    """Raised for malformed external files (DOTA, COCO, detection JSON).

    Carries the 1-based line number when the source is line-oriented.
    """

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        prefix = ""
        if path is not None:
            prefix += f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


class KindMismatch(DiagraphError):
    """Raised when tuple sets of different diagram kinds are compared."""


class UnknownDiagram(DiagraphError):
    """Raised by the annotation store for ids it does not hold."""


class VersionConflict(DiagraphError):
    """Raised when an optimistic-concurrency write loses the race.

    ``current_version`` is the version the store actually holds.
    """

    def __init__(self, message: str, current_version: int):
        self.current_version = current_version
        super().__init__(message)


class InvalidAnnotations(DiagraphError):
    """Raised when a submitted annotation set fails validation."""

    def __init__(self, message: str, violations: list):
        self.violations = violations
        super().__init__(message)
