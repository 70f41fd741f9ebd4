"""
Error types for the gauge-family library.

Every error carries a human-readable ``detail``, an optional dotted config
``path`` naming the offending scenario field, and the process ``exit_code``
the CLI uses for it (2 validation, 3 numerical failure).
"""

from typing import Any, Optional

VALIDATION_EXIT = 2
NUMERICAL_EXIT = 3


class GaugeFamilyError(Exception):
    exit_code: int = VALIDATION_EXIT

    def __init__(self, detail: str, path: Optional[str] = None):
        super().__init__(detail)
        self.detail = detail
        self.path = path

    def with_path(self, path: str) -> "GaugeFamilyError":
        """Attach a config path unless a more specific one is already set."""
        if self.path is None:
            self.path = path
        return self

    def __str__(self) -> str:
        if self.path:
            return f"{self.path}: {self.detail}"
        return self.detail


# ============================================================================
# Validation errors (exit 2)
# ============================================================================


class ExpressionError(GaugeFamilyError, ValueError):
    """Malformed expression text. Also a ValueError so pydantic can locate it."""

    def __init__(self, detail: str, offset: Optional[int] = None, path: Optional[str] = None):
        if offset is not None:
            detail = f"{detail} at offset {offset}"
        super().__init__(detail, path)
        self.offset = offset


class ExpressionSyntaxError(ExpressionError):
    pass


class UnknownIdentifierError(ExpressionError):
    pass


class ArityError(ExpressionError):
    pass


class NonRealExpressionError(ExpressionError):
    """Input text or literal that is not a finite real number, e.g. sqrt(-1)."""


class SingularGaugeError(GaugeFamilyError):
    pass


class WindingError(GaugeFamilyError):
    pass


class NotSubgroupError(GaugeFamilyError):
    pass


class FamilyError(GaugeFamilyError):
    pass


class DegenerateEquationError(GaugeFamilyError):
    pass


class NodeError(GaugeFamilyError):
    pass


class GridError(GaugeFamilyError):
    pass


class PreconditionError(GaugeFamilyError):
    pass


class ScenarioError(GaugeFamilyError):
    pass


# ============================================================================
# Numerical failures (exit 3)
# ============================================================================


class ExpressionDomainError(GaugeFamilyError):
    exit_code = NUMERICAL_EXIT


class EngineError(GaugeFamilyError):
    exit_code = NUMERICAL_EXIT


class InstabilityError(GaugeFamilyError):
    exit_code = NUMERICAL_EXIT

    def __init__(self, detail: str, trajectory: Any = None, path: Optional[str] = None):
        super().__init__(detail, path)
        # Snapshots recorded before the blow-up; the last one is finite.
        self.trajectory = trajectory
