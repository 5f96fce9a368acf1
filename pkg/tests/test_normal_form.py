"""Tests for the pencil extraction and the diffusive normal form."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import ortho_group

from frontselect.const import CASE_COLINEAR, CASE_INDEPENDENT
from frontselect.dispersion import solve_spreading_speed
from frontselect.exceptions import HypothesisError
from frontselect.normal_form import (
    NormalForm,
    PencilData,
    build_normal_form,
    dispersion_curvature,
    extract_pencil,
    pencil_from_coefficients,
)
from frontselect.systems import builtin


def test_gl_pencil_is_colinear(gl_pencil: PencilData) -> None:
    assert gl_pencil.case == CASE_COLINEAR
    assert np.abs(gl_pencil.u0) == pytest.approx([1.0, 0.0], abs=1e-8)
    assert gl_pencil.u1 == pytest.approx(gl_pencil.u0)
    # u-block of the shifted symbol is ν² - λ
    assert gl_pencil.A0[0, 0] == pytest.approx(0.0, abs=1e-8)
    assert gl_pencil.A01[0, 0] == pytest.approx(0.0, abs=1e-8)


def test_kpp_pencil_is_scalar(kpp_pencil: PencilData) -> None:
    assert kpp_pencil.case == CASE_COLINEAR
    assert kpp_pencil.n == 1
    assert kpp_pencil.u0 == pytest.approx([1.0])


def test_hidden_diffusion_pencil_is_independent(hidden_nf: NormalForm) -> None:
    assert hidden_nf.case == CASE_INDEPENDENT
    assert not hidden_nf.has_h_block


def test_hidden_diffusion_chain() -> None:
    p = pencil_from_coefficients(
        A0=[[0.0, 0.0], [0.0, -1.0]], A01=[[0.0, 1.0], [1.0, 0.0]], A02=np.zeros((2, 2))
    )
    assert p.case == CASE_INDEPENDENT
    assert p.u0 == pytest.approx([1.0, 0.0])
    assert p.u1 == pytest.approx([0.0, 1.0])


@pytest.mark.parametrize("fixture", ["kpp_nf", "gl_nf", "hidden_nf"])
def test_effective_diffusivity_is_one(fixture: str, request: pytest.FixtureRequest) -> None:
    nf = request.getfixturevalue(fixture)
    assert nf.D_eff == pytest.approx(1.0, abs=1e-9)
    assert max(nf.structure.values()) < 1e-10


def test_gl_normal_form_coefficients(gl_nf: NormalForm) -> None:
    assert gl_nf.b("11_02")[0, 0] == pytest.approx(1.0, abs=1e-10)
    assert gl_nf.b("11_10")[0, 0] == pytest.approx(-1.0, abs=1e-10)
    # Co-linear: b21 has no constant and no ν-linear term
    assert np.max(np.abs(gl_nf.b("21_00"))) < 1e-10
    assert np.max(np.abs(gl_nf.b("21_01"))) < 1e-10


def test_hidden_diffusion_split(hidden_nf: NormalForm) -> None:
    assert hidden_nf.b("11_02")[0, 0] == pytest.approx(0.0, abs=1e-10)
    assert hidden_nf.b("12_01")[0, 0] == pytest.approx(1.0, abs=1e-10)


def test_kpp_transformation_is_trivial(kpp_nf: NormalForm) -> None:
    assert np.abs(kpp_nf.S) * np.abs(kpp_nf.Q) == pytest.approx([[1.0]])


@pytest.mark.parametrize(
    ("pencil", "nf"), [("gl_pencil", "gl_nf"), ("kpp_pencil", "kpp_nf")]
)
def test_round_trip(pencil: str, nf: str, request: pytest.FixtureRequest) -> None:
    p = request.getfixturevalue(pencil)
    form = request.getfixturevalue(nf)
    rng = np.random.default_rng(7)
    for lam, nu in rng.normal(size=(50, 2)) + 1j * rng.normal(size=(50, 2)):
        original = p.symbol(lam, nu)
        recovered = np.linalg.solve(form.S, form.transform(lam, nu)) @ np.linalg.inv(form.Q)
        assert np.linalg.norm(recovered - original) <= 1e-9 * max(
            1.0, np.linalg.norm(original)
        )


@pytest.mark.parametrize(
    ("name", "params"),
    [
        ("kpp", {}),
        ("parametric_gl", {"beta": 1.0}),
        ("lotka_volterra", {"a1": 0.5}),
        ("transcritical", {}),
    ],
)
def test_curvature_oracle(name: str, params: dict) -> None:
    spec = builtin(name, params)
    p = extract_pencil(spec, solve_spreading_speed(spec))
    nf = build_normal_form(p)
    assert dispersion_curvature(p) == pytest.approx(nf.D_eff, abs=1e-6)


def test_case_is_invariant_under_rotation(gl_pencil: PencilData) -> None:
    R = ortho_group.rvs(2, random_state=3)
    rotated = pencil_from_coefficients(
        R.T @ gl_pencil.A0 @ R, R.T @ gl_pencil.A01 @ R, R.T @ gl_pencil.A02 @ R
    )
    assert rotated.case == gl_pencil.case
    assert build_normal_form(rotated).D_eff == pytest.approx(1.0, abs=1e-9)


def test_two_dimensional_kernel_rejected() -> None:
    with pytest.raises(HypothesisError, match="one-dimensional"):
        pencil_from_coefficients(np.zeros((2, 2)), np.eye(2), np.eye(2))


def test_sign_condition() -> None:
    with pytest.raises(HypothesisError) as err:
        pencil_from_coefficients([[0.0]], [[0.0]], [[-1.0]])
    assert err.value.witness["product"] > 0


def test_missing_jordan_chain() -> None:
    A0 = np.diag([0.0, 1.0])
    with pytest.raises(HypothesisError, match="no solution"):
        pencil_from_coefficients(A0, np.eye(2), np.eye(2))


def test_b_table_export(gl_nf: NormalForm) -> None:
    data = gl_nf.to_dict()
    assert data["b_table"]["b11_02"] == pytest.approx([[1.0]], abs=1e-10)
    assert "coefficients" not in data
