"""Utility functions for frontselect."""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np
from scipy import sparse

# One-sided closures of the fourth-order stencils, nodes 0.. relative to the boundary
_FIRST_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_SECOND_INTERIOR = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_FIRST_CLOSURE = (
    np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
    np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0,
)
_SECOND_CLOSURE = (
    np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0,
    np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0,
)


def smoothstep(s: np.ndarray | float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quintic smoothstep rising from 0 at s <= 0 to 1 at s >= 1.

    Args:
        s: Evaluation points

    Returns:
        Value, first and second derivative
    """
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    value = s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
    first = 30.0 * s**2 * (1.0 - s) ** 2
    second = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
    return value, first, second


def fourth_order_matrices(m: int, h: float) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """First and second derivative matrices of fourth order on m uniform nodes.

    Boundary rows use one-sided closures of the same order.

    Args:
        m: Number of nodes (at least 6)
        h: Node spacing

    Returns:
        Tuple (D1, D2) of sparse m x m matrices
    """
    if m < 6:
        raise ValueError("fourth-order stencils need at least 6 nodes")
    first = sparse.lil_matrix((m, m))
    second = sparse.lil_matrix((m, m))
    for i in range(2, m - 2):
        first[i, i - 2 : i + 3] = _FIRST_INTERIOR
        second[i, i - 2 : i + 3] = _SECOND_INTERIOR
    for i in range(2):
        first[i, 0:5] = _FIRST_CLOSURE[i]
        second[i, 0:6] = _SECOND_CLOSURE[i]
        # Mirror image at the right end
        first[m - 1 - i, m - 5 :] = -_FIRST_CLOSURE[i][::-1]
        second[m - 1 - i, m - 6 :] = _SECOND_CLOSURE[i][::-1]
    return (first / h).tocsr(), (second / h**2).tocsr()


def extrapolate_to_zero(points: np.ndarray, values: list[np.ndarray]) -> np.ndarray:
    """Evaluate the interpolating polynomial through (points, values) at zero."""
    points = np.asarray(points, dtype=float)
    result = np.zeros_like(np.asarray(values[0]), dtype=complex)
    for i, value in enumerate(values):
        others = np.delete(points, i)
        weight = np.prod(others / (others - points[i]))
        result = result + weight * np.asarray(value)
    return result


def loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)[0])


def config_hash(config: dict[str, Any]) -> str:
    """Return the sha256 of a canonical JSON rendering of a configuration."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def to_jsonable(value: Any) -> Any:
    """Convert numpy values and containers into JSON serializable objects.

    Complex numbers become ``{"re": .., "im": ..}`` mappings.
    """
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, complex | np.complexfloating):
        return {"re": float(np.real(value)), "im": float(np.imag(value))}
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value
