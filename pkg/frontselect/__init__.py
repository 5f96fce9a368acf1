"""Numerical toolkit for front selection in reaction-diffusion systems."""

from __future__ import annotations

import json
from pathlib import Path

from .const import DOMAIN
from .exceptions import (
    CapabilityError,
    ConvergenceError,
    ExpressionParseError,
    FrontSelectError,
    HypothesisError,
    OutputError,
    SystemDefinitionError,
)

_MANIFEST = json.loads((Path(__file__).parent / "manifest.json").read_text())

__version__: str = _MANIFEST["version"]

__all__ = [
    "DOMAIN",
    "CapabilityError",
    "ConvergenceError",
    "ExpressionParseError",
    "FrontSelectError",
    "HypothesisError",
    "OutputError",
    "SystemDefinitionError",
    "__version__",
]
