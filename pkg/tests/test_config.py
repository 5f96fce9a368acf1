"""Tests for configuration schemas."""

from __future__ import annotations

import pytest

from frontselect.config import (
    parse_param_overrides,
    validate_manifest,
    validate_sim_config,
    validate_system_config,
)
from frontselect.exceptions import OutputError, SystemDefinitionError


def test_param_overrides() -> None:
    assert parse_param_overrides("beta=3, theta=0.04") == {"beta": 3.0, "theta": 0.04}
    assert parse_param_overrides(None) == {}


@pytest.mark.parametrize("text", ["beta", "=1", "beta=three"])
def test_malformed_overrides(text: str) -> None:
    with pytest.raises(SystemDefinitionError):
        parse_param_overrides(text)


def test_sim_defaults() -> None:
    settings = validate_sim_config(
        {"x_left": -10, "x_right": 10, "dx": 0.1, "dt": 0.01, "t_end": 1}
    )
    assert settings["frame"] == "lab"
    assert settings["scheme"] == "cnab2"
    assert settings["h_track"] == 0.5
    assert isinstance(settings["x_left"], float)


def test_sim_domain_order() -> None:
    with pytest.raises(SystemDefinitionError, match="x_left < x_right"):
        validate_sim_config({"x_left": 1, "x_right": 0, "dx": 0.1, "dt": 0.01, "t_end": 1})


def test_sim_threshold_range() -> None:
    with pytest.raises(SystemDefinitionError):
        validate_sim_config(
            {"x_left": 0, "x_right": 1, "dx": 0.1, "dt": 0.01, "t_end": 1, "h_track": 1.0}
        )


def test_system_schema_requires_reactions() -> None:
    with pytest.raises(SystemDefinitionError, match="reactions"):
        validate_system_config(
            {"name": "x", "n": 1, "D": [[1.0]], "equilibria": []}
        )


def test_manifest_schema() -> None:
    with pytest.raises(OutputError):
        validate_manifest({"command": "analyze"})
