"""Configuration schemas for frontselect."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import voluptuous as vol

from .const import BURN_IN_TIME, DEFAULT_H_TRACK, DEFAULT_T, FIT_START_FRACTION, ROLES
from .exceptions import OutputError, SystemDefinitionError

_LOGGER = logging.getLogger(__name__)

CONF_NAME = "name"
CONF_N = "n"
CONF_D = "D"
CONF_REACTIONS = "reactions"
CONF_PARAMS = "params"
CONF_EQUILIBRIA = "equilibria"
CONF_ADVECTION = "advection"
CONF_SYMBOL_ONLY = "symbol_only"

_NUMBER = vol.All(vol.Any(int, float), vol.Coerce(float))
_MATRIX = vol.Any([[_NUMBER]], [_NUMBER])

SYSTEM_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_NAME): str,
        vol.Required(CONF_N): vol.All(int, vol.Range(min=1)),
        vol.Required(CONF_D): _MATRIX,
        vol.Required(CONF_REACTIONS): [str],
        vol.Optional(CONF_PARAMS, default=dict): {str: _NUMBER},
        vol.Required(CONF_EQUILIBRIA): [
            {
                vol.Required("point"): [_NUMBER],
                vol.Required("role"): vol.In(ROLES),
            }
        ],
        vol.Optional(CONF_ADVECTION): _MATRIX,
        vol.Optional(CONF_SYMBOL_ONLY, default=False): bool,
    }
)

SIM_SCHEMA = vol.Schema(
    {
        vol.Required("x_left"): _NUMBER,
        vol.Required("x_right"): _NUMBER,
        vol.Required("dx"): vol.All(_NUMBER, vol.Range(min=0, min_included=False)),
        vol.Required("dt"): vol.All(_NUMBER, vol.Range(min=0, min_included=False)),
        vol.Required("t_end"): vol.All(_NUMBER, vol.Range(min=0, min_included=False)),
        vol.Optional("initial", default="step"): vol.In(("step", "front", "custom")),
        vol.Optional("x0", default=0.0): _NUMBER,
        vol.Optional("frame", default="lab"): vol.In(("lab", "comoving")),
        vol.Optional("scheme", default="cnab2"): vol.In(("cnab2", "euler")),
        vol.Optional("T", default=DEFAULT_T): vol.All(
            _NUMBER, vol.Range(min=0, min_included=False)
        ),
        vol.Optional("snapshot_every", default=1.0): vol.All(
            _NUMBER, vol.Range(min=0, min_included=False)
        ),
        vol.Optional("h_track", default=DEFAULT_H_TRACK): vol.All(
            _NUMBER, vol.Range(min=0, max=1, min_included=False, max_included=False)
        ),
        vol.Optional("track_component", default=0): vol.All(int, vol.Range(min=0)),
        vol.Optional("fit_start", default=FIT_START_FRACTION): vol.All(
            _NUMBER, vol.Range(min=0, max=1)
        ),
        vol.Optional("burn_in", default=BURN_IN_TIME): vol.All(_NUMBER, vol.Range(min=0)),
    }
)

MANIFEST_SCHEMA = vol.Schema(
    {
        vol.Required("command"): str,
        vol.Required("arguments"): dict,
        vol.Required("system"): dict,
        vol.Required("config_hash"): str,
        vol.Required("version"): str,
        vol.Optional("outputs", default=list): [str],
        vol.Optional("timings", default=dict): {str: _NUMBER},
        vol.Optional("exit_code", default=0): int,
    },
    extra=vol.ALLOW_EXTRA,
)


def validate_system_config(data: dict[str, Any]) -> dict[str, Any]:
    """Validate a system definition mapping.

    Args:
        data: Parsed system definition

    Returns:
        The validated definition with defaults filled in

    Raises:
        SystemDefinitionError: The definition does not match SYSTEM_SCHEMA
    """
    try:
        return SYSTEM_SCHEMA(data)
    except vol.Invalid as err:
        raise SystemDefinitionError(f"Invalid system definition: {err}") from err


def validate_sim_config(data: dict[str, Any]) -> dict[str, Any]:
    """Validate simulation settings against SIM_SCHEMA."""
    try:
        validated = SIM_SCHEMA(data)
    except vol.Invalid as err:
        raise SystemDefinitionError(f"Invalid simulation settings: {err}") from err
    if validated["x_right"] <= validated["x_left"]:
        raise SystemDefinitionError("Simulation domain must have x_left < x_right")
    return validated


def read_json(path: str | Path) -> dict[str, Any]:
    """Read a JSON document, reporting parse failures with their location.

    Raises:
        OutputError: The file cannot be read
        SystemDefinitionError: The file is not valid JSON
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise OutputError(f"Could not read {path}: {err}") from err
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise SystemDefinitionError(
            f"{path}: {err.msg} (line {err.lineno}, column {err.colno})"
        ) from err


def parse_param_overrides(text: str | None) -> dict[str, float]:
    """Parse ``k=v,k2=v2`` parameter overrides.

    Raises:
        SystemDefinitionError: An entry is malformed or not numeric
    """
    overrides: dict[str, float] = {}
    if not text:
        return overrides
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise SystemDefinitionError(f"Malformed parameter override: {item!r}")
        try:
            overrides[key.strip()] = vol.Coerce(float)(value.strip())
        except vol.Invalid as err:
            raise SystemDefinitionError(
                f"Parameter {key.strip()} is not a number: {value!r}"
            ) from err
    _LOGGER.debug("Parameter overrides: %s", overrides)
    return overrides


def validate_manifest(data: dict[str, Any]) -> dict[str, Any]:
    """Validate a run manifest mapping against MANIFEST_SCHEMA."""
    try:
        return MANIFEST_SCHEMA(data)
    except vol.Invalid as err:
        raise OutputError(f"Invalid run manifest: {err}") from err
