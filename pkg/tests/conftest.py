"""Shared fixtures for the frontselect tests."""

from __future__ import annotations

import pytest

from frontselect.dispersion import SpreadingSpeedResult, solve_spreading_speed
from frontselect.front import FrontProfile, solve_front
from frontselect.normal_form import NormalForm, PencilData, build_normal_form, extract_pencil
from frontselect.systems import SystemSpec, builtin
from frontselect.tail import SelfSimilarProfiles, solve_profiles


@pytest.fixture(scope="session")
def kpp() -> SystemSpec:
    """Scalar Fisher-KPP system."""
    return builtin("kpp")


@pytest.fixture(scope="session")
def kpp_speed(kpp: SystemSpec) -> SpreadingSpeedResult:
    """Spreading speed of the KPP system."""
    return solve_spreading_speed(kpp)


@pytest.fixture(scope="session")
def kpp_pencil(kpp: SystemSpec, kpp_speed: SpreadingSpeedResult) -> PencilData:
    """Marginal pencil of the KPP system."""
    return extract_pencil(kpp, kpp_speed)


@pytest.fixture(scope="session")
def kpp_nf(kpp_pencil: PencilData) -> NormalForm:
    """Normal form of the KPP system."""
    return build_normal_form(kpp_pencil)


@pytest.fixture(scope="session")
def kpp_front(
    kpp: SystemSpec, kpp_speed: SpreadingSpeedResult, kpp_pencil: PencilData
) -> FrontProfile:
    """Critical KPP front on the default domain."""
    return solve_front(kpp, kpp_speed, kpp_pencil)


@pytest.fixture(scope="session")
def kpp_profiles(kpp_nf: NormalForm) -> SelfSimilarProfiles:
    """Self-similar tail profiles of the KPP system."""
    return solve_profiles(kpp_nf)


@pytest.fixture(scope="session")
def gl() -> SystemSpec:
    """Parametric Ginzburg-Landau system with beta = 1."""
    return builtin("parametric_gl", {"beta": 1.0})


@pytest.fixture(scope="session")
def gl_speed(gl: SystemSpec) -> SpreadingSpeedResult:
    """Spreading speed of the Ginzburg-Landau system."""
    return solve_spreading_speed(gl)


@pytest.fixture(scope="session")
def gl_pencil(gl: SystemSpec, gl_speed: SpreadingSpeedResult) -> PencilData:
    """Marginal pencil of the Ginzburg-Landau system."""
    return extract_pencil(gl, gl_speed)


@pytest.fixture(scope="session")
def gl_nf(gl_pencil: PencilData) -> NormalForm:
    """Normal form of the Ginzburg-Landau system."""
    return build_normal_form(gl_pencil)


@pytest.fixture(scope="session")
def gl_front(
    gl: SystemSpec, gl_speed: SpreadingSpeedResult, gl_pencil: PencilData
) -> FrontProfile:
    """Critical Ginzburg-Landau front."""
    return solve_front(gl, gl_speed, gl_pencil)


@pytest.fixture(scope="session")
def hidden() -> SystemSpec:
    """Symbol-only hidden-diffusion system."""
    return builtin("hidden_diffusion")


@pytest.fixture(scope="session")
def hidden_speed(hidden: SystemSpec) -> SpreadingSpeedResult:
    """Marginal double root of the hidden-diffusion system at c = 0."""
    return SpreadingSpeedResult.from_root(hidden, 0.0, (0j, 0j))


@pytest.fixture(scope="session")
def hidden_nf(hidden: SystemSpec, hidden_speed: SpreadingSpeedResult) -> NormalForm:
    """Normal form of the hidden-diffusion system (independent case)."""
    return build_normal_form(extract_pencil(hidden, hidden_speed))
