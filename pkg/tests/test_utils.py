"""Tests for numerical and serialization helpers."""

from __future__ import annotations

import json

import numpy as np
import pytest

from frontselect.utils import (
    config_hash,
    extrapolate_to_zero,
    fourth_order_matrices,
    loglog_slope,
    smoothstep,
    to_jsonable,
)


def test_fourth_order_stencils_are_exact_on_quartics() -> None:
    x = np.linspace(-1.0, 2.0, 31)
    first, second = fourth_order_matrices(len(x), x[1] - x[0])
    y = x**4 - 2 * x**3 + x
    assert first @ y == pytest.approx(4 * x**3 - 6 * x**2 + 1, abs=1e-9)
    assert second @ y == pytest.approx(12 * x**2 - 12 * x, abs=1e-8)


def test_stencils_need_six_nodes() -> None:
    with pytest.raises(ValueError):
        fourth_order_matrices(5, 0.1)


def test_smoothstep() -> None:
    value, first, second = smoothstep(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
    assert value == pytest.approx([0.0, 0.0, 0.5, 1.0, 1.0])
    assert first[[0, 1, 3, 4]] == pytest.approx(0.0)
    assert second[[0, 1, 3, 4]] == pytest.approx(0.0)
    assert first[2] == pytest.approx(1.875)


def test_extrapolation_removes_polynomial_error() -> None:
    points = np.array([0.1, 0.05, 0.025])
    values = [3.0 + 2 * p - p**2 for p in points]
    assert extrapolate_to_zero(points, values).real == pytest.approx(3.0)


def test_loglog_slope() -> None:
    x = np.array([1e-2, 1e-3, 1e-4])
    assert loglog_slope(x, 5 * x**3) == pytest.approx(3.0)


def test_config_hash_ignores_key_order() -> None:
    assert config_hash({"a": 1, "b": [2, 3]}) == config_hash({"b": [2, 3], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_to_jsonable() -> None:
    data = to_jsonable(
        {"z": np.array([1 + 2j]), "flag": np.bool_(True), "count": np.int64(3), 4: (1.5,)}
    )
    assert data == {
        "z": [{"re": 1.0, "im": 2.0}],
        "flag": True,
        "count": 3,
        "4": [1.5],
    }
    json.dumps(data)
