"""Tests for the command-line front end."""

from __future__ import annotations

from collections.abc import Iterator
import json
import logging

import pytest

from frontselect.cli import build_parser, main
from frontselect.const import EXIT_DEFINITION, EXIT_IO, EXIT_OK


@pytest.fixture(autouse=True)
def _restore_logging() -> Iterator[None]:
    """Undo the handler installed by main."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def _printed(out: str) -> dict[str, float]:
    """Parse the key=value pairs of the first printed line."""
    pairs = (token.split("=") for token in out.splitlines()[0].split())
    return {key: float(value) for key, value in pairs}


def test_analyze_kpp(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["analyze", "--system", "kpp", "--out", str(tmp_path)]) == EXIT_OK
    expected = {"c_star": 2.0, "eta_star": 1.0}
    assert _printed(capsys.readouterr().out) == pytest.approx(expected)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "analyze"
    assert manifest["exit_code"] == EXIT_OK
    assert manifest["outputs"] == [str(tmp_path / "speed.json")]
    assert len(manifest["config_hash"]) == 64
    speed = json.loads((tmp_path / "speed.json").read_text())
    assert speed["c_star"] == pytest.approx(2.0, abs=1e-8)


def test_replay(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    main(["analyze", "--system", "parametric_gl", "--param", "beta=3", "--out", str(tmp_path)])
    first = json.loads((tmp_path / "manifest.json").read_text())
    capsys.readouterr()

    assert main(["analyze", "--replay", str(tmp_path / "manifest.json")]) == EXIT_OK
    expected = {"c_star": 4.0, "eta_star": 2.0}
    assert _printed(capsys.readouterr().out) == pytest.approx(expected)
    second = json.loads((tmp_path / "manifest.json").read_text())
    assert second["config_hash"] == first["config_hash"]


def test_out_of_range_parameter(tmp_path) -> None:
    code = main(
        ["analyze", "--system", "lotka_volterra", "--param", "a1=1.5", "--out", str(tmp_path)]
    )
    assert code == EXIT_DEFINITION


def test_unknown_system(tmp_path) -> None:
    assert main(["analyze", "--system", "nope", "--out", str(tmp_path)]) == EXIT_DEFINITION


def test_speed_scan(tmp_path) -> None:
    args = ["analyze", "--system", "parametric_gl", "--scan", "beta=0.5:2:4"]
    assert main([*args, "--out", str(tmp_path)]) == EXIT_OK
    scan = json.loads((tmp_path / "speed_scan.json").read_text())
    assert len(scan["speeds"]) == 4


def test_malformed_scan(tmp_path) -> None:
    args = ["analyze", "--system", "kpp", "--scan", "beta", "--out", str(tmp_path)]
    assert main(args) == EXIT_DEFINITION
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["exit_code"] == EXIT_DEFINITION


def test_front_command(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["front", "--system", "kpp", "--out", str(tmp_path)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("a=")
    assert (tmp_path / "front.csv").read_text().startswith("x,q1")
    assert (tmp_path / "wake.json").exists()


def test_simulate_command(tmp_path, capsys: pytest.CaptureFixture[str]) -> None:
    settings = tmp_path / "sim.json"
    settings.write_text(json.dumps({"snapshot_every": 0.5, "dt": 0.05}))
    args = [
        "simulate",
        "--system",
        "kpp",
        "--config",
        str(settings),
        "--domain=-20,200",
        "--dt",
        "0.01",
        "--t-end",
        "60",
        "--out",
        str(tmp_path / "run"),
    ]
    assert main(args) == EXIT_OK
    assert "c_fit=" in capsys.readouterr().out
    trajectory = json.loads((tmp_path / "run" / "trajectory.json").read_text())
    # flags win over the settings file
    assert trajectory["config"]["dt"] == 0.01
    assert trajectory["config"]["snapshot_every"] == 0.5
    for name in ("track.csv", "sensitivity.json", "convergence.csv", "manifest.json"):
        assert (tmp_path / "run" / name).exists()


def test_help_lists_tolerances(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as err:
        main(["spectrum", "--help"])
    assert err.value.code == 0
    out = capsys.readouterr().out
    assert "zero-mode floor constant" in out
    assert "exit codes" in out


def test_bracket_must_be_a_pair() -> None:
    with pytest.raises(SystemExit):
        build_parser().parse_args(["analyze", "--bracket", "1"])


def test_unwritable_output(tmp_path) -> None:
    blocked = tmp_path / "file"
    blocked.write_text("")
    assert main(["analyze", "--system", "kpp", "--out", str(blocked / "out")]) == EXIT_IO
