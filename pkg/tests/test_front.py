"""Tests for the critical front and wake stability."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from frontselect.const import DEFAULT_SPACING
from frontselect.dispersion import SpreadingSpeedResult, solve_spreading_speed
from frontselect.exceptions import CapabilityError, HypothesisError
from frontselect.front import FrontProfile, check_wake_stability, solve_front
from frontselect.normal_form import PencilData, extract_pencil
from frontselect.systems import SystemSpec, builtin, system_from_config
from frontselect.utils import loglog_slope


def test_kpp_front(kpp_front: FrontProfile) -> None:
    q = kpp_front.values[:, 0]
    assert kpp_front.residual_norm < 1e-8
    assert q[0] == pytest.approx(1.0, abs=1e-6)
    assert abs(q[-1]) < 1e-6
    assert np.all(np.diff(q) < 1e-10)
    assert math.isfinite(kpp_front.a)
    assert kpp_front.tail_rate > 0


@pytest.fixture(scope="module")
def fine_kpp_front(
    kpp: SystemSpec, kpp_speed: SpreadingSpeedResult, kpp_pencil: PencilData
) -> FrontProfile:
    """KPP front on a grid twice as fine as the default one."""
    return solve_front(kpp, kpp_speed, kpp_pencil, h=DEFAULT_SPACING / 2)


def test_kpp_front_matches_shooting(fine_kpp_front: FrontProfile) -> None:
    start = 25.0
    tail = fine_kpp_front.tail
    initial = np.concatenate([tail([start])[:, 0], tail([start], 1)[:, 0]])

    def rhs(_x: float, y: np.ndarray) -> list[float]:
        return [y[1], -2.0 * y[1] - y[0] + y[0] ** 2]

    xs = np.linspace(start, -5.0, 61)
    solution = solve_ivp(
        rhs, (start, -5.0), initial, method="DOP853", t_eval=xs, rtol=1e-12, atol=1e-24
    )
    assert solution.success
    assert np.max(np.abs(fine_kpp_front.evaluate(xs)[0] - solution.y[0])) < 1e-6


def test_front_constant_converges_at_fourth_order(
    kpp: SystemSpec,
    kpp_speed: SpreadingSpeedResult,
    kpp_pencil: PencilData,
    kpp_front: FrontProfile,
    fine_kpp_front: FrontProfile,
) -> None:
    coarse = solve_front(kpp, kpp_speed, kpp_pencil, h=2 * DEFAULT_SPACING)
    fronts = [coarse, kpp_front, fine_kpp_front]
    assert [front.h for front in fronts] == pytest.approx([0.1, 0.05, 0.025])
    changes = np.abs(np.diff([front.a for front in fronts]))
    assert loglog_slope(np.array([0.1, 0.05]), changes) >= 3.5


def test_tail_continues_the_grid(kpp_front: FrontProfile) -> None:
    edge = kpp_front.grid[-1]
    inside = kpp_front.evaluate([edge - 1e-9])[0, 0]
    outside = kpp_front.evaluate([edge + 1e-9])[0, 0]
    assert outside == pytest.approx(inside, rel=1e-3)
    assert kpp_front.evaluate([kpp_front.grid[0] - 1.0])[0, 0] == pytest.approx(1.0)


def test_front_constant_is_domain_independent(
    kpp: SystemSpec,
    kpp_speed: SpreadingSpeedResult,
    kpp_pencil: PencilData,
    kpp_front: FrontProfile,
) -> None:
    shifted = solve_front(kpp, kpp_speed, kpp_pencil, domain=(-40.0, 60.0))
    assert shifted.a == pytest.approx(kpp_front.a, abs=1e-5)


def test_gl_front_stays_real(gl_front: FrontProfile) -> None:
    assert np.max(np.abs(gl_front.values[:, 1])) < 1e-10
    assert gl_front.values[0, 0] == pytest.approx(math.sqrt(2), abs=1e-6)
    assert gl_front.residual_norm < 1e-8


def test_front_csv(kpp_front: FrontProfile, tmp_path) -> None:
    path = kpp_front.to_csv(tmp_path / "out" / "front.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "x,q1"
    assert len(lines) == len(kpp_front.grid) + 1


def test_front_export_skips_arrays(kpp_front: FrontProfile) -> None:
    data = kpp_front.to_dict()
    assert "values" not in data
    assert data["c_star"] == pytest.approx(2.0)


def test_symbol_only_front_rejected(
    hidden: SystemSpec, hidden_speed: SpreadingSpeedResult, kpp_pencil: PencilData
) -> None:
    with pytest.raises(CapabilityError):
        solve_front(hidden, hidden_speed, kpp_pencil)


def test_missing_wake_state() -> None:
    spec = system_from_config(
        {
            "name": "logistic-no-wake",
            "n": 1,
            "D": [[1.0]],
            "reactions": ["u1 - u1^2"],
            "equilibria": [{"point": [0.0], "role": "unstable-origin"}],
        }
    )
    speed = solve_spreading_speed(spec)
    with pytest.raises(HypothesisError) as err:
        solve_front(spec, speed, extract_pencil(spec, speed))
    assert err.value.hypothesis == "3"


def test_kpp_wake_margin(kpp: SystemSpec, kpp_speed: SpreadingSpeedResult) -> None:
    verdict = check_wake_stability(kpp, kpp_speed)
    assert verdict.stable
    assert verdict.margin == pytest.approx(1.0, abs=1e-8)


def test_gl_wake_margin(gl: SystemSpec, gl_speed: SpreadingSpeedResult) -> None:
    verdict = check_wake_stability(gl, gl_speed)
    assert verdict.stable
    assert verdict.margin == pytest.approx(2.0, abs=1e-8)


def test_lotka_volterra_wake() -> None:
    spec = builtin("lotka_volterra", {"a1": 0.5, "a2": 2.0})
    assert check_wake_stability(spec, solve_spreading_speed(spec)).stable


def test_unstable_state_fails_with_witness(
    kpp: SystemSpec, kpp_speed: SpreadingSpeedResult
) -> None:
    verdict = check_wake_stability(kpp, kpp_speed, point=kpp.unstable_state)
    assert not verdict.stable
    assert verdict.margin == pytest.approx(-1.0, abs=1e-8)
    assert verdict.k_max == pytest.approx(0.0, abs=1e-8)


def _front_for(name: str, theta: float) -> FrontProfile:
    spec = builtin(name, {"theta": theta})
    speed = solve_spreading_speed(spec)
    return solve_front(spec, speed, extract_pencil(spec, speed))


def test_transcritical_v_component_is_order_theta() -> None:
    thetas = np.array([0.04, 0.01, 0.0025])
    norms = [np.max(np.abs(_front_for("transcritical", t).values[:, 1])) for t in thetas]
    assert loglog_slope(thetas, np.array(norms)) >= 0.9


def test_saddlenode_v_component_vanishes() -> None:
    front = _front_for("saddlenode", 0.01)
    assert front.values[0, 0] == pytest.approx(2.0, abs=1e-6)
    assert np.max(np.abs(front.values[:, 1])) < 1e-12
