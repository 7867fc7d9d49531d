## @file errors.py
## @brief Exception hierarchy shared by every DIO_Observer module.

from __future__ import annotations


class DioError(Exception):
    """@brief Base class for all errors raised by the package."""


class InvalidInputError(DioError, ValueError):
    """@brief Shapes, finiteness or bound ordering violated."""


class EmptyIntersectionError(InvalidInputError):
    """@brief Two intervals share no point in some coordinate."""


class NotStronglyConnectedError(DioError):
    """@brief Some ordered node pair has no directed path."""


class LpError(DioError):
    pass


class DegeneratePivotError(LpError):
    """@brief The simplex method met a pivot too small to trust."""


class InvalidAssignmentError(DioError):
    """@brief A selection source lies outside the admissible d-hop set."""


class ObserverInternalError(DioError):
    """@brief The local update produced lower > upper."""


class ExpressionError(InvalidInputError):
    """@brief A scenario value could not be evaluated; `token` locates it."""

    def __init__(self, message: str, token=None):
        self.token = token
        super().__init__(message)


class ScenarioError(DioError):
    """@brief Scenario file failed to parse or validate.

    Carries the analyzer diagnostics so callers can show line/field context.
    """

    def __init__(self, diagnostics, path: str | None = None):
        self.diagnostics = list(diagnostics)
        self.path = path
        where = f"{path}: " if path else ""
        lines = [
            f"{where}line {d.range.start.line + 1}: {d.message}"
            for d in self.diagnostics
        ]
        super().__init__("\n".join(lines) or f"{where}invalid scenario")


class PipelineError(DioError):
    """@brief A pipeline stage failed; `stage` names it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
