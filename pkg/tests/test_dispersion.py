"""Tests for the dispersion relation and spreading speeds."""

from __future__ import annotations

import math

import numpy as np
import pytest

from frontselect.dispersion import (
    DoubleRoot,
    SpreadingSpeedResult,
    SymbolPencil,
    _check_hypothesis_1,
    expansion_residual_slope,
    far_field_expansion,
    find_double_root,
    solve_spreading_speed,
    spatial_eigenvalues,
    speed_scan,
    verify_pinching,
)
from frontselect.exceptions import CapabilityError, HypothesisError
from frontselect.systems import SystemSpec, builtin, system_from_config


def test_kpp_spatial_eigenvalues(kpp: SystemSpec) -> None:
    pencil = SymbolPencil.from_spec(kpp, 2.0)
    assert spatial_eigenvalues(pencil, 0.0) == pytest.approx([-1.0, -1.0], abs=1e-7)
    assert spatial_eigenvalues(pencil, 1.0) == pytest.approx([-2.0, 0.0], abs=1e-10)


def test_gl_spatial_eigenvalues(gl: SystemSpec) -> None:
    pencil = SymbolPencil.from_spec(gl, 2 * math.sqrt(2))
    roots = spatial_eigenvalues(pencil, 0.0)
    assert len(roots) == 4
    assert np.sum(np.abs(roots + math.sqrt(2)) < 1e-6) == 2


def test_spatial_eigenvalues_conjugation(gl: SystemSpec) -> None:
    pencil = SymbolPencil.from_spec(gl, 2.5)
    lam = 0.3 + 0.2j
    direct = np.sort_complex(spatial_eigenvalues(pencil, lam))
    mirrored = np.sort_complex(np.conj(spatial_eigenvalues(pencil, np.conj(lam))))
    assert direct == pytest.approx(mirrored, abs=1e-10)


def test_kpp_double_root(kpp: SystemSpec) -> None:
    root = find_double_root(SymbolPencil.from_spec(kpp, 2.0), (0.1, -0.9))
    assert root.lambda_dr == pytest.approx(0.0, abs=1e-9)
    assert root.nu_dr == pytest.approx(-1.0, abs=1e-9)
    assert root.d10 == pytest.approx(-1.0, abs=1e-9)
    assert root.d02 == pytest.approx(1.0, abs=1e-9)
    assert root.simple
    assert root.pinched


def test_gl_double_root(gl: SystemSpec) -> None:
    pencil = SymbolPencil.from_spec(gl, 2 * math.sqrt(2))
    root = find_double_root(pencil, (0.05, -1.35))
    assert root.lambda_dr == pytest.approx(0.0, abs=1e-9)
    assert root.nu_dr == pytest.approx(-math.sqrt(2), abs=1e-8)
    assert root.d10 == pytest.approx(2.0, abs=1e-8)
    assert root.d02 == pytest.approx(-2.0, abs=1e-8)
    assert root.pinched


def test_hidden_diffusion_double_root(hidden: SystemSpec) -> None:
    root = find_double_root(SymbolPencil.from_spec(hidden, 0.0), (0.05, 0.05))
    assert root.lambda_dr == pytest.approx(0.0, abs=1e-9)
    assert root.nu_dr == pytest.approx(0.0, abs=1e-9)
    assert root.d10 == pytest.approx(1.0, abs=1e-9)
    assert root.d02 == pytest.approx(-1.0, abs=1e-9)


def test_scalar_double_roots_are_always_pinched(kpp: SystemSpec) -> None:
    pencil = SymbolPencil.from_spec(kpp, 3.0)
    root = find_double_root(pencil, (-1.2, -1.4), pinching=False)
    assert root.lambda_dr == pytest.approx(-1.25, abs=1e-9)
    assert root.nu_dr == pytest.approx(-1.5, abs=1e-9)
    assert verify_pinching(pencil, root).pinched


def test_crossing_of_two_stable_roots_is_not_pinched() -> None:
    # ν² + 3ν + 1 - λ and 2ν² + 3ν - 3 - λ share their stable root ν = -2 at λ = -1
    pencil = SymbolPencil(
        D=np.diag([1.0, 2.0]), B=np.zeros((2, 2)), J=np.diag([1.0, -3.0]), c=3.0
    )
    root = DoubleRoot(
        c=3.0, lambda_dr=-1.0, nu_dr=-2.0, d10=0j, d02=0j, residual=0.0, simple=False
    )
    assert pencil.det(-1.0, -2.0) == pytest.approx(0.0, abs=1e-12)
    trace = verify_pinching(pencil, root)
    assert not trace.pinched
    assert max(trace.start_real_parts) < 0


def test_expansion_order(kpp: SystemSpec, gl: SystemSpec) -> None:
    kpp_pencil = SymbolPencil.from_spec(kpp, 2.0)
    kpp_root = find_double_root(kpp_pencil, (0.1, -0.9), pinching=False)
    assert expansion_residual_slope(kpp_pencil, kpp_root) is None

    gl_pencil = SymbolPencil.from_spec(gl, 2 * math.sqrt(2))
    gl_root = find_double_root(gl_pencil, (0.05, -1.35), pinching=False)
    assert 2.7 <= expansion_residual_slope(gl_pencil, gl_root) <= 3.3


@pytest.mark.parametrize("beta", [0.5, 1.0, 3.0])
def test_gl_speed(beta: float) -> None:
    result = solve_spreading_speed(builtin("parametric_gl", {"beta": beta}))
    assert result.c_star == pytest.approx(2 * math.sqrt(1 + beta), abs=1e-8)
    assert result.eta_star == pytest.approx(math.sqrt(1 + beta), abs=1e-8)
    assert result.passed


def test_gl_speed_with_bracket() -> None:
    result = solve_spreading_speed(builtin("parametric_gl", {"beta": 3.0}), (1.0, 8.0))
    assert result.c_star == pytest.approx(4.0, abs=1e-8)
    assert result.eta_star == pytest.approx(2.0, abs=1e-8)


@pytest.mark.parametrize("a1", [0.5, 0.75])
def test_lotka_volterra_speed(a1: float) -> None:
    result = solve_spreading_speed(builtin("lotka_volterra", {"a1": a1}))
    assert result.c_star == pytest.approx(2 * math.sqrt(1 - a1), abs=1e-8)


@pytest.mark.parametrize("name", ["transcritical", "pitchfork"])
def test_scaled_bifurcation_speed(name: str) -> None:
    result = solve_spreading_speed(builtin(name))
    assert result.c_star == pytest.approx(2.0, abs=1e-8)
    assert result.eta_star == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("theta", [0.04, 0.01])
def test_unscaled_transcritical_speed(theta: float) -> None:
    spec = builtin("transcritical", {"theta": theta, "scaled": 0.0})
    assert solve_spreading_speed(spec).c_star == pytest.approx(2 * math.sqrt(theta), rel=1e-6)


def test_unscaled_saddlenode_speed() -> None:
    theta = 0.04
    spec = builtin("saddlenode", {"theta": theta, "scaled": 0.0})
    expected = 2 * math.sqrt(2) * theta**0.25
    assert solve_spreading_speed(spec).c_star == pytest.approx(expected, rel=1e-6)


def test_kpp_speed_record(kpp_speed: SpreadingSpeedResult) -> None:
    assert kpp_speed.c_star == pytest.approx(2.0, abs=1e-8)
    assert kpp_speed.nu_star == pytest.approx(-1.0, abs=1e-8)
    assert kpp_speed.passed
    data = kpp_speed.to_dict()
    assert "root" not in data
    assert data["pinched"] is True
    assert data["sign_ok"] is True


def test_stable_origin_fails_hypothesis_1() -> None:
    spec = system_from_config(
        {
            "name": "decay",
            "n": 1,
            "D": [[1.0]],
            "reactions": ["-u1"],
            "equilibria": [{"point": [0.0], "role": "unstable-origin"}],
        }
    )
    with pytest.raises(HypothesisError) as err:
        solve_spreading_speed(spec)
    assert err.value.hypothesis == "1"


def test_symbol_only_rejected(hidden: SystemSpec) -> None:
    with pytest.raises(CapabilityError):
        solve_spreading_speed(hidden)


@pytest.mark.parametrize("fixture", ["kpp", "gl"])
def test_far_field_slope(fixture: str, request: pytest.FixtureRequest) -> None:
    spec = request.getfixturevalue(fixture)
    speed = request.getfixturevalue(f"{fixture}_speed")
    pencil = SymbolPencil.from_spec(spec.centered(), speed.c_star, eta=speed.eta_star)
    report = far_field_expansion(pencil, speed.root)
    assert report.expected_slope == pytest.approx(1.0, abs=1e-8)
    assert report.slope == pytest.approx(1.0, abs=1e-4)
    assert report.nondegenerate


def test_far_field_rejects_zero(kpp: SystemSpec, kpp_speed: SpreadingSpeedResult) -> None:
    pencil = SymbolPencil.from_spec(kpp, 2.0, eta=1.0)
    with pytest.raises(ValueError):
        far_field_expansion(pencil, kpp_speed.root, gammas=(1e-2, 0.0))


def test_far_field_needs_invertible_diffusion(
    hidden: SystemSpec, hidden_speed: SpreadingSpeedResult
) -> None:
    with pytest.raises(CapabilityError):
        far_field_expansion(SymbolPencil.from_spec(hidden, 0.0), hidden_speed.root)


def test_gl_speed_scan() -> None:
    betas = [0.25, 1.0, 4.0]
    scan = speed_scan("parametric_gl", "beta", betas)
    assert scan.monotone
    assert scan.speeds == pytest.approx([2 * math.sqrt(1 + b) for b in betas], abs=1e-8)


def test_same_sign_expansion_coefficients_fail() -> None:
    # -(ν - 1)² - λ has d10 = d02 = -1
    pencil = SymbolPencil(
        D=np.array([[-1.0]]), B=np.zeros((1, 1)), J=np.array([[-1.0]]), c=2.0
    )
    root = find_double_root(pencil, (0.1, 0.9), pinching=False)
    assert root.d10 * root.d02 == pytest.approx(1.0, abs=1e-9)
    assert not root.sign_ok

    root.pinched = True
    result = SpreadingSpeedResult(
        c_star=2.0, eta_star=-1.0, root=root, hyp1_ii_ok=True, hyp1_iii_ok=True
    )
    assert not result.passed
    with pytest.raises(HypothesisError) as err:
        far_field_expansion(pencil, root)
    assert err.value.hypothesis == "1(i)"


@pytest.mark.parametrize(("d02", "ok"), [(-1.0 + 1e-12j, True), (-1.0 + 1e-6j, False)])
def test_sign_condition_needs_a_real_product(d02: complex, ok: bool) -> None:
    root = DoubleRoot(
        c=2.0, lambda_dr=0j, nu_dr=-1 + 0j, d10=1 + 0j, d02=d02, residual=0.0, simple=True
    )
    assert root.sign_ok is ok


def test_hypothesis_1_witness_reports_omega() -> None:
    # KPP symbol plus a rotating pair whose eigenvalues sit at ±3i for k = 0
    J = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, -3.0], [0.0, 3.0, 1.0]])
    pencil = SymbolPencil(D=np.eye(3), B=np.zeros((3, 3)), J=J, c=2.0)
    ii_ok, iii_ok, witnesses, _ = _check_hypothesis_1(pencil, -1.0, 201, 1e-8)
    assert not ii_ok
    assert iii_ok
    assert abs(witnesses["hyp1_ii"]["omega"]) == pytest.approx(3.0, abs=1e-8)
    assert witnesses["hyp1_ii"]["k"] == 0.0
