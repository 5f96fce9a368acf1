"""Tests for the exponential and algebraic weights."""

from __future__ import annotations

import numpy as np
import pytest

from frontselect.weights import WeightSpec


def test_omega_outside_the_blend() -> None:
    weight = WeightSpec(1.5)
    x = np.array([-30.0, -1.0, 1.0, 4.0])
    assert weight.omega(x) == pytest.approx([1.0, 1.0, np.exp(1.5), np.exp(6.0)])
    assert weight.rate(x) == pytest.approx([0.0, 0.0, 1.5, 1.5])
    assert weight.rate_derivative(x) == pytest.approx([0.0, 0.0, 0.0, 0.0])


def test_omega_is_positive_and_smooth() -> None:
    weight = WeightSpec(2.0)
    x = np.linspace(-2.0, 2.0, 4001)
    h = x[1] - x[0]
    log_omega = weight.log_omega(x)
    assert np.all(weight.omega(x) > 0)
    slope = np.gradient(log_omega, h)
    assert slope[1:-1] == pytest.approx(weight.rate(x)[1:-1], abs=1e-5)
    curvature = np.gradient(weight.rate(x), h)
    assert curvature[1:-1] == pytest.approx(weight.rate_derivative(x)[1:-1], abs=1e-2)


def test_algebraic_weight() -> None:
    weight = WeightSpec(1.0, r_minus=0.0, r_plus=-1.0)
    x = np.array([-5.0, -1.0, 1.0, 10.0])
    assert weight.rho(x) == pytest.approx([1.0, 1.0, 1.0, 0.1])


def test_algebraic_weight_is_continuously_differentiable() -> None:
    weight = WeightSpec(1.0, r_minus=2.0, r_plus=3.0)
    eps = 1e-7
    for edge in (-1.0, 1.0):
        inside = edge * (1 - eps)
        outside = edge * (1 + eps)
        assert weight.log_rho(inside) == pytest.approx(weight.log_rho(outside), abs=1e-6)
    assert weight.rho(np.array([-2.0, 2.0])) == pytest.approx([4.0, 8.0])
