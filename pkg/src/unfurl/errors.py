"""Error taxonomy shared across the toolkit.

Configuration and input problems are ValueErrors; stage failures detected at
runtime (a search that hit its boundary, an optimizer that never found a
feasible candidate, a pipeline stage missing its prerequisite artifact) are
RuntimeErrors so callers can tell them apart from bad arguments.
"""

from __future__ import annotations


class UnfurlError(Exception):
    """Base class for every error this package raises on purpose."""


class SpecError(UnfurlError, ValueError):
    """A phantom or configuration value violates one of its invariants."""


class ConsistencyError(UnfurlError, RuntimeError):
    """An internal self-check failed (e.g. a real filter produced complex rows)."""


class PathIntersectionError(UnfurlError, ValueError):
    """A fitted path crosses itself; ``location`` is near the crossing."""

    def __init__(self, message: str, location: tuple[float, float] | None = None):
        super().__init__(message)
        self.location = location


class CalibrationError(UnfurlError, RuntimeError):
    """Axis search failed, e.g. the optimum sits on the search boundary."""


class OptimizationError(UnfurlError, RuntimeError):
    """Path optimization could not produce any feasible candidate."""


class MissingStageError(UnfurlError, RuntimeError):
    """A pipeline stage was run before the stage it depends on."""


class MergeError(UnfurlError, ValueError):
    """Unwrapped sheets cannot be merged (incompatible shapes or coverage)."""
