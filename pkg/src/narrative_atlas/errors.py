"""Error types shared across the extraction pipeline.

Every failure the package raises deliberately is a subclass of
:class:`NarrativeAtlasError`, so callers (CLI, HTTP service) can map
errors to exit codes and status codes without string matching.
"""

from __future__ import annotations


class NarrativeAtlasError(Exception):
    """Base class for all deliberate failures.

    ``stage`` is filled in by the pipeline when an error propagates out of
    a specific processing step, so messages read like
    ``[clustering] invalid cluster count: 1``.
    """

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message
        self.stage: str | None = None

    def __str__(self) -> str:
        if self.stage:
            return f"[{self.stage}] {self.message}"
        return self.message


class ValidationError(NarrativeAtlasError):
    """Malformed input data or out-of-range configuration."""


class NotFoundError(NarrativeAtlasError):
    """A referenced corpus, embedding set, or map does not exist."""


class InfeasibleError(NarrativeAtlasError):
    """The extraction program admits no solution.

    ``constraint_class`` names the first constraint family that cannot be
    satisfied: ``"acceptance"``, ``"coverage"``, or ``"structure"``.
    """

    def __init__(self, message: str, constraint_class: str):
        super().__init__(message)
        self.constraint_class = constraint_class


class SolverInconsistencyError(NarrativeAtlasError):
    """Independent re-checking of a solution found a constraint violation."""
