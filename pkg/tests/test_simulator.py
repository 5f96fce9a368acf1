"""Tests for the direct simulator and the front tracker."""

from __future__ import annotations

import logging

import numpy as np
import pytest

from frontselect.dispersion import SpreadingSpeedResult, solve_spreading_speed
from frontselect.exceptions import SystemDefinitionError
from frontselect.front import FrontProfile, solve_front
from frontselect.normal_form import extract_pencil
from frontselect.simulator import (
    FRAME_COMOVING,
    SCHEME_EULER,
    SimConfig,
    Trajectory,
    compare_to_front,
    crossing,
    fit_position,
    integrate,
    integrate_many,
    linear_sine_solution,
    track_front,
    track_sensitivity,
)
from frontselect.systems import SystemSpec, builtin, system_from_config


@pytest.fixture(scope="module")
def kpp_run(kpp: SystemSpec, kpp_speed: SpreadingSpeedResult) -> Trajectory:
    """Short KPP run from step data."""
    cfg = SimConfig(
        x_left=-20.0, x_right=200.0, dx=0.1, dt=0.01, t_end=60.0, snapshot_every=0.5
    )
    return integrate(kpp, cfg, speed=kpp_speed)


def _linear(reactions: list[str], D: list[list[float]]) -> SystemSpec:
    n = len(reactions)
    return system_from_config(
        {
            "name": "linear",
            "n": n,
            "D": D,
            "reactions": reactions,
            "equilibria": [{"point": [0.0] * n, "role": "unstable-origin"}],
        }
    )


@pytest.mark.parametrize(
    ("reactions", "D", "rate"),
    [
        (["u1"], [[1.0]], [[1.0]]),
        (["0.5*u1 + u2", "-u2"], [[1.0, 0.0], [0.0, 2.0]], [[0.5, 1.0], [0.0, -1.0]]),
    ],
)
def test_linear_oracle(reactions: list[str], D: list, rate: list) -> None:
    spec = _linear(reactions, D)
    cfg = SimConfig(
        x_left=0.0, x_right=10.0, dx=0.1, dt=5e-4, t_end=1.0, initial="custom"
    )
    x = cfg.grid
    profile = np.sin(np.pi * x / 10.0)
    initial = np.vstack([profile * (j + 1) for j in range(spec.n)])
    traj = integrate(spec, cfg, samples=initial)
    exact = linear_sine_solution(np.asarray(D), np.asarray(rate), x, initial, 1.0)
    assert traj.times[-1] == pytest.approx(1.0)
    assert np.max(np.abs(traj.values[-1] - exact)) < 1e-5


def test_wake_state_is_steady(kpp: SystemSpec) -> None:
    cfg = SimConfig(x_left=-20.0, x_right=20.0, dx=0.1, dt=0.01, t_end=1.0, x0=25.0)
    traj = integrate(kpp, cfg)
    interior = traj.x < 10.0
    assert traj.values[-1, 0, interior] == pytest.approx(1.0, abs=1e-9)


def test_kpp_stays_below_the_wake(kpp: SystemSpec) -> None:
    cfg = SimConfig(
        x_left=-20.0, x_right=60.0, dx=0.1, dt=0.004, t_end=5.0, scheme=SCHEME_EULER
    )
    traj = integrate(kpp, cfg)
    assert traj.cfl == pytest.approx(0.8)
    assert np.max(traj.values) <= 1.0 + 1e-6
    assert np.min(traj.values) >= -1e-6


def test_explicit_scheme_checks_cfl(kpp: SystemSpec) -> None:
    cfg = SimConfig(
        x_left=-20.0, x_right=20.0, dx=0.1, dt=0.01, t_end=1.0, scheme=SCHEME_EULER
    )
    with pytest.raises(SystemDefinitionError, match="explicit"):
        integrate(kpp, cfg)


def test_symbol_only_cannot_be_simulated(hidden: SystemSpec) -> None:
    cfg = SimConfig(x_left=0.0, x_right=10.0, dx=0.1, dt=0.01, t_end=1.0)
    with pytest.raises(SystemDefinitionError, match="symbol-only"):
        integrate(hidden, cfg)


def test_custom_data_shape(kpp: SystemSpec) -> None:
    cfg = SimConfig(
        x_left=0.0, x_right=10.0, dx=0.1, dt=0.01, t_end=1.0, initial="custom"
    )
    with pytest.raises(SystemDefinitionError, match="shape"):
        integrate(kpp, cfg, samples=np.zeros((2, 5)))


def test_clearance_warning(
    kpp: SystemSpec, kpp_speed: SpreadingSpeedResult, caplog: pytest.LogCaptureFixture
) -> None:
    cfg = SimConfig(x_left=-20.0, x_right=20.0, dx=0.1, dt=0.01, t_end=0.5)
    with caplog.at_level(logging.WARNING):
        integrate(kpp, cfg, speed=kpp_speed)
    assert "right boundary" in caplog.text


def test_comoving_frame_positions(kpp: SystemSpec, kpp_speed: SpreadingSpeedResult) -> None:
    cfg = SimConfig(
        x_left=-30.0, x_right=30.0, dx=0.1, dt=0.01, t_end=1.0, frame=FRAME_COMOVING
    )
    traj = integrate(kpp, cfg, speed=kpp_speed)
    assert traj.c_frame == pytest.approx(2.0)
    assert traj.delay == pytest.approx(1.5)
    t = np.array([0.0, 10.0, 100.0])
    y = np.array([1.0, -2.0, 3.0])
    lab = traj.lab_position(t, y)
    assert lab[0] == pytest.approx(1.0)
    assert lab[1] == pytest.approx(-2.0 + 20.0 - 1.5 * np.log(1.1))
    assert traj.frame_position(t, lab) == pytest.approx(y)


def test_comoving_frame_needs_speed(kpp: SystemSpec) -> None:
    cfg = SimConfig(
        x_left=-30.0, x_right=30.0, dx=0.1, dt=0.01, t_end=1.0, frame=FRAME_COMOVING
    )
    with pytest.raises(SystemDefinitionError, match="spreading speed"):
        integrate(kpp, cfg)


def test_integrate_many_keeps_order(kpp: SystemSpec) -> None:
    runs = [
        (kpp, SimConfig(x_left=-10.0, x_right=10.0, dx=0.1, dt=0.01, t_end=t), {})
        for t in (0.5, 1.0, 1.5)
    ]
    trajectories = integrate_many(runs, workers=2)
    assert [traj.times[-1] for traj in trajectories] == pytest.approx([0.5, 1.0, 1.5])


def test_fit_recovers_parameters() -> None:
    t = np.linspace(10.0, 100.0, 200)
    params, covariance, rms = fit_position(t, 3.0 * t - 1.5 * np.log(t) + 7.0)
    assert params == pytest.approx([3.0, 1.5, 7.0], abs=1e-8)
    assert covariance.shape == (3, 3)
    assert rms < 1e-8


def test_crossing() -> None:
    x = np.arange(5.0)
    assert crossing(x, np.array([1.0, 1.0, 0.5, 0.0, 0.0]), 0.75) == pytest.approx(1.5)
    assert crossing(x[:4], np.array([1.0, 0.0, 1.0, 0.0]), 0.5) == pytest.approx(2.5)
    assert crossing(x, np.zeros(5), 0.5) is None


def test_kpp_track(kpp_run: Trajectory) -> None:
    track = track_front(kpp_run, speed=None)
    assert track.c_fit == pytest.approx(2.0, abs=0.1)
    assert track.kappa_fit > 0
    assert track.monotone
    assert track.truncated_at is None
    assert track.window[0] == pytest.approx(15.0)
    assert track.position(np.array([60.0]))[0] == pytest.approx(track.positions[-1], abs=0.5)


def test_track_records_theory(kpp_run: Trajectory, kpp_speed: SpreadingSpeedResult) -> None:
    track = track_front(kpp_run, speed=kpp_speed)
    assert track.c_star == pytest.approx(2.0)
    assert track.kappa_theory == pytest.approx(1.5)
    assert "positions" not in track.to_dict()


def test_threshold_shifts_only_the_offset(kpp_run: Trajectory) -> None:
    report = track_sensitivity(kpp_run)
    assert report.levels == [0.25, 0.5, 0.75]
    assert np.all(np.diff(report.x_inf_fits) < 0)
    assert report.c_spread < 0.05


def test_short_fit_window_rejected(kpp: SystemSpec) -> None:
    cfg = SimConfig(
        x_left=-20.0, x_right=20.0, dx=0.1, dt=0.01, t_end=2.0, snapshot_every=0.1
    )
    with pytest.raises(SystemDefinitionError, match="fit window"):
        track_front(integrate(kpp, cfg))


def test_exports(kpp_run: Trajectory, tmp_path) -> None:
    lines = kpp_run.to_csv(tmp_path / "trajectory.csv", stride=60).read_text().splitlines()
    assert lines[0] == "t,x,u1"
    assert len(lines) == 3 * len(kpp_run.x) + 1
    data = kpp_run.to_dict()
    assert "values" not in data
    assert data["snapshots"] == 121

    track = track_front(kpp_run)
    lines = track.to_csv(tmp_path / "track.csv").read_text().splitlines()
    assert lines[0] == "t,X,X_minus_ct"
    assert len(lines) == len(track.times) + 1


def test_distance_to_a_rigidly_moving_front(kpp_front: FrontProfile, tmp_path) -> None:
    x = np.linspace(-40.0, 160.0, 4001)
    times = np.linspace(0.0, 50.0, 201)
    values = np.stack([kpp_front.evaluate(x - 2.0 * t) for t in times])
    cfg = SimConfig(x_left=-40.0, x_right=160.0, dx=0.05, dt=0.05, t_end=50.0)
    traj = Trajectory(
        name="rigid",
        times=times,
        x=x,
        values=values,
        origin=np.zeros(1),
        u_minus=kpp_front.u_minus,
        config=cfg,
        c_frame=0.0,
        delay=0.0,
        cfl=0.0,
        steps=len(times) - 1,
    )
    track = track_front(traj)
    assert track.c_fit == pytest.approx(2.0, abs=1e-8)
    assert track.kappa_fit == pytest.approx(0.0, abs=1e-6)

    report = compare_to_front(traj, kpp_front, track)
    assert report.passed
    assert report.final < 1e-6
    assert not report.skipped
    lines = report.to_csv(tmp_path / "convergence.csv").read_text().splitlines()
    assert lines[0] == "t,distance"
    assert len(lines) == len(report.times) + 1


@pytest.mark.slow
@pytest.mark.parametrize(
    ("name", "params"), [("kpp", {}), ("parametric_gl", {"beta": 1.0})]
)
def test_selected_speed(name: str, params: dict) -> None:
    spec = builtin(name, params)
    speed = solve_spreading_speed(spec)
    cfg = SimConfig(
        x_left=-100.0, x_right=1200.0, dx=0.1, dt=0.004, t_end=400.0, snapshot_every=1.0
    )
    traj = integrate(spec, cfg, speed=speed)
    track = track_front(traj, speed=speed)
    assert track.c_fit == pytest.approx(speed.c_star, rel=0.02)
    if name == "kpp":
        assert 1.0 <= track.kappa_fit <= 2.1

    front = solve_front(spec, speed, extract_pencil(spec, speed))
    report = compare_to_front(traj, front, track)
    assert report.decreasing
    assert report.final < 0.1
