"""Exceptions raised by frontselect."""

from __future__ import annotations

from typing import Any


class FrontSelectError(Exception):
    """Base exception for frontselect errors."""


class SystemDefinitionError(FrontSelectError):
    """Exception for an invalid reaction-diffusion system or parameter set."""

    def __init__(self, message: str, eigenvalue: complex | None = None) -> None:
        """Initialize the error.

        Args:
            message: Human readable description
            eigenvalue: Offending diffusion eigenvalue, when relevant
        """
        super().__init__(message)
        self.eigenvalue = eigenvalue


class ExpressionParseError(SystemDefinitionError):
    """Exception for a reaction expression that cannot be parsed."""

    def __init__(self, message: str, line: int, column: int) -> None:
        """Initialize the error with the location of the failure."""
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class CapabilityError(SystemDefinitionError):
    """Exception for a symbol-only system passed to a module needing a parabolic one."""


class ConvergenceError(FrontSelectError):
    """Exception for numerical non-convergence."""


class HypothesisError(FrontSelectError):
    """Exception for a failed hypothesis check."""

    def __init__(
        self, hypothesis: str, message: str, witness: dict[str, Any] | None = None
    ) -> None:
        """Initialize the error.

        Args:
            hypothesis: Label of the failing hypothesis (e.g. "1(ii)")
            message: Human readable description
            witness: Data exhibiting the failure
        """
        super().__init__(f"Hypothesis {hypothesis}: {message}")
        self.hypothesis = hypothesis
        self.witness = witness or {}


class OutputError(FrontSelectError):
    """Exception for output directory or manifest I/O failures."""
