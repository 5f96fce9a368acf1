"""Reaction-diffusion system definitions and the builtin registry."""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
from scipy.optimize import brentq

from .config import (
    CONF_ADVECTION,
    CONF_D,
    CONF_EQUILIBRIA,
    CONF_N,
    CONF_NAME,
    CONF_PARAMS,
    CONF_REACTIONS,
    CONF_SYMBOL_ONLY,
    read_json,
    validate_system_config,
)
from .const import (
    EQUILIBRIUM_TOL,
    FD_JACOBIAN_STEP,
    JACOBIAN_REL_TOL,
    JACOBIAN_SAMPLES,
    ROLE_UNSTABLE,
    ROLE_WAKE,
)
from .exceptions import SystemDefinitionError
from .expressions import ReactionTerm

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """A tagged equilibrium of the reaction term."""

    point: np.ndarray
    role: str


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """System u_t = D u_xx + B u_x + f(u) on the line."""

    name: str
    n: int
    D: np.ndarray
    reaction: ReactionTerm
    equilibria: tuple[Equilibrium, ...]
    params: Mapping[str, float] = field(default_factory=dict)
    advection: np.ndarray | None = None
    symbol_only: bool = False
    sources: tuple[str, ...] = ()
    origin: np.ndarray | None = None

    def __post_init__(self) -> None:
        """Check the standing assumptions on D, the equilibria and the Jacobian."""
        D = np.asarray(self.D, dtype=float).reshape(self.n, self.n)
        object.__setattr__(self, "D", D)
        B = np.zeros((self.n, self.n)) if self.advection is None else self.advection
        object.__setattr__(self, "advection", np.asarray(B, dtype=float).reshape(self.n, self.n))
        if self.origin is None:
            object.__setattr__(self, "origin", np.zeros(self.n))
        if self.reaction.n != self.n:
            raise SystemDefinitionError(
                f"{self.name}: reaction has {self.reaction.n} components, expected {self.n}"
            )

        if not self.symbol_only:
            for eigenvalue in np.linalg.eigvals(D):
                if eigenvalue.real <= 0:
                    raise SystemDefinitionError(
                        f"{self.name}: diffusion matrix has eigenvalue {eigenvalue:.6g} "
                        "with non-positive real part",
                        eigenvalue=complex(eigenvalue),
                    )

        for equilibrium in self.equilibria:
            if equilibrium.point.shape != (self.n,):
                raise SystemDefinitionError(
                    f"{self.name}: equilibrium {equilibrium.point} has wrong dimension"
                )
            residual = np.max(np.abs(self.f(equilibrium.point)))
            if residual > EQUILIBRIUM_TOL:
                raise SystemDefinitionError(
                    f"{self.name}: f does not vanish at {equilibrium.role} "
                    f"{equilibrium.point.tolist()} (residual {residual:.3g})"
                )
        if not any(e.role == ROLE_UNSTABLE for e in self.equilibria):
            raise SystemDefinitionError(f"{self.name}: no equilibrium tagged {ROLE_UNSTABLE}")

        mismatch = self.jacobian_mismatch(JACOBIAN_SAMPLES)
        if mismatch > JACOBIAN_REL_TOL:
            raise SystemDefinitionError(
                f"{self.name}: symbolic Jacobian disagrees with finite differences "
                f"(relative {mismatch:.3g})"
            )

    def f(self, u: np.ndarray) -> np.ndarray:
        """Evaluate the reaction term on states of shape (n, ...)."""
        return self.reaction(u)

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        """Evaluate the reaction Jacobian, shape (n, n, ...)."""
        return self.reaction.jacobian(u)

    @property
    def unstable_state(self) -> np.ndarray:
        """The equilibrium tagged as the invaded unstable state."""
        return next(e.point for e in self.equilibria if e.role == ROLE_UNSTABLE)

    @property
    def wake_state(self) -> np.ndarray | None:
        """The equilibrium selected behind the front, if one is tagged."""
        return next((e.point for e in self.equilibria if e.role == ROLE_WAKE), None)

    @property
    def linearization(self) -> np.ndarray:
        """Jacobian f'(u_+) at the unstable state."""
        return self.jacobian(self.unstable_state)

    def jacobian_mismatch(self, samples: int, seed: int = 0) -> float:
        """Largest relative gap between the symbolic and a central-difference Jacobian.

        Points are drawn uniformly from the unit ball.
        """
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            direction = rng.normal(size=self.n)
            radius = rng.uniform() ** (1.0 / self.n)
            point = radius * direction / np.linalg.norm(direction)
            exact = self.jacobian(point)
            approx = np.empty_like(exact)
            for j in range(self.n):
                step = np.zeros(self.n)
                step[j] = FD_JACOBIAN_STEP
                approx[:, j] = (self.f(point + step) - self.f(point - step)) / (
                    2 * FD_JACOBIAN_STEP
                )
            scale = max(1.0, np.max(np.abs(exact)))
            worst = max(worst, float(np.max(np.abs(exact - approx)) / scale))
        return worst

    def centered(self) -> SystemSpec:
        """Return the system translated so that the unstable state is the origin."""
        offset = self.unstable_state
        if not np.any(offset):
            return self
        return SystemSpec(
            name=self.name,
            n=self.n,
            D=self.D,
            reaction=self.reaction.shifted(offset),
            equilibria=tuple(
                Equilibrium(e.point - offset, e.role) for e in self.equilibria
            ),
            params=self.params,
            advection=self.advection,
            symbol_only=self.symbol_only,
            sources=self.sources,
            origin=self.origin + offset,
        )

    def diagnostics(self) -> dict[str, Any]:
        """Report conditioning data for the diffusion matrix and the equilibria."""
        eigenvalues, vectors = np.linalg.eig(self.D)
        return {
            "D_eigenvalues": eigenvalues,
            "D_eigenvector_condition": float(np.linalg.cond(vectors)),
            "equilibrium_residuals": {
                e.role: float(np.max(np.abs(self.f(e.point)))) for e in self.equilibria
            },
            "symbol_only": self.symbol_only,
        }

    def to_config(self) -> dict[str, Any]:
        """Serialize to the system file layout, in the original coordinates."""
        config: dict[str, Any] = {
            CONF_NAME: self.name,
            CONF_N: self.n,
            CONF_D: self.D.tolist(),
            CONF_REACTIONS: list(self.sources),
            CONF_PARAMS: dict(self.params),
            CONF_EQUILIBRIA: [
                {"point": (e.point + self.origin).tolist(), "role": e.role}
                for e in self.equilibria
            ],
            CONF_SYMBOL_ONLY: self.symbol_only,
        }
        if np.any(self.advection):
            config[CONF_ADVECTION] = self.advection.tolist()
        return config


def system_from_config(data: dict[str, Any]) -> SystemSpec:
    """Build a SystemSpec from a system definition mapping.

    Raises:
        SystemDefinitionError: Schema, parse or invariant violation
    """
    config = validate_system_config(data)
    n = config[CONF_N]
    D = np.asarray(config[CONF_D], dtype=float)
    if D.size != n * n:
        raise SystemDefinitionError(f"D must have {n * n} entries, got {D.size}")
    advection = config.get(CONF_ADVECTION)
    if advection is not None:
        advection = np.asarray(advection, dtype=float)
        if advection.size != n * n:
            raise SystemDefinitionError(f"advection must have {n * n} entries")
    params = config[CONF_PARAMS]
    reaction = ReactionTerm.from_strings(config[CONF_REACTIONS], n, params)
    return SystemSpec(
        name=config[CONF_NAME],
        n=n,
        D=D.reshape(n, n),
        reaction=reaction,
        equilibria=tuple(
            Equilibrium(np.asarray(e["point"], dtype=float), e["role"])
            for e in config[CONF_EQUILIBRIA]
        ),
        params=params,
        advection=advection,
        symbol_only=config[CONF_SYMBOL_ONLY],
        sources=tuple(config[CONF_REACTIONS]),
    )


def load_system(path: str | Path) -> SystemSpec:
    """Load a system definition file (JSON)."""
    spec = system_from_config(read_json(path))
    _LOGGER.debug("Loaded system %s from %s", spec.name, path)
    return spec


# Builtin families

_DEFAULTS: dict[str, dict[str, float]] = {
    "kpp": {},
    "transcritical": {"theta": 0.04, "d": 1.0, "k": 1.0, "scaled": 1.0},
    "pitchfork": {"theta": 0.04, "d": 1.0, "k": 1.0, "scaled": 1.0},
    "saddlenode": {"theta": 0.04, "d": 1.0, "k": 1.0, "scaled": 1.0},
    "parametric_gl": {"beta": 1.0},
    "lotka_volterra": {"a1": 0.5, "a2": 2.0, "r": 1.0, "sigma": 1.0},
    "tumor": {"D": 1.0, "p_s": 0.5, "gamma_u": 1.0, "gamma_v": 1.0, "alpha": 0.8},
    "hidden_diffusion": {},
}

BUILTIN_NAMES = tuple(_DEFAULTS)

_SMALL_THETA = 0.1


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SystemDefinitionError(message)


def _check_bifurcation_params(name: str, p: Mapping[str, float]) -> bool:
    """Validate theta, d, k for the bifurcation families; return the scaled flag."""
    _require(p["theta"] > 0, f"{name}: theta must be positive")
    _require(p["d"] > 0, f"{name}: d must be positive")
    _require(p["k"] > 0, f"{name}: k must be positive")
    _require(p["scaled"] in (0.0, 1.0), f"{name}: scaled must be 0 or 1")
    if p["theta"] > _SMALL_THETA:
        _LOGGER.warning(
            "%s: theta=%s is outside the small-theta regime covered by the theory",
            name,
            p["theta"],
        )
    return p["scaled"] == 1.0


def _kpp(p: Mapping[str, float]) -> tuple:
    return [[1.0]], ["u1 - u1^2"], [[0.0]], [[1.0]]


def _transcritical(p: Mapping[str, float]) -> tuple:
    scaled = _check_bifurcation_params("transcritical", p)
    theta, k = p["theta"], p["k"]
    _require(4 * theta / k < 1, "transcritical: the wake state needs 4*theta/k < 1")
    U = (1 - math.sqrt(1 - 4 * theta / k)) / (2 * theta / k)
    D = [[1.0, 0.0], [0.0, p["d"]]]
    if scaled:
        reactions = ["u1 - u1^2 + u1*u2", "-(k/theta)*u2 + u1^2"]
        wake = [U, theta * U**2 / k]
    else:
        reactions = ["theta*u1 - u1^2 + u1*u2", "-k*u2 + u1^2"]
        wake = [theta * U, theta**2 * U**2 / k]
    return D, reactions, [[0.0, 0.0]], [wake]


def _pitchfork(p: Mapping[str, float]) -> tuple:
    scaled = _check_bifurcation_params("pitchfork", p)
    theta, k = p["theta"], p["k"]
    root_theta = math.sqrt(theta)
    _require(root_theta / k < 3 / 8, "pitchfork: the wake state needs sqrt(theta)/k < 3/8")
    U = brentq(lambda s: 1 - s**2 + root_theta * s**3 / k, 1.0, 2.0, xtol=1e-15)
    D = [[1.0, 0.0], [0.0, p["d"]]]
    if scaled:
        reactions = ["u1 - u1^3 + u1^2*u2", "-(k/theta)*u2 + theta^(-1/2)*u1^2"]
        wake = [U, root_theta * U**2 / k]
    else:
        reactions = ["theta*u1 - u1^3 + u1^2*u2", "-k*u2 + u1^2"]
        wake = [root_theta * U, theta * U**2 / k]
    return D, reactions, [[0.0, 0.0]], [wake]


def _saddlenode(p: Mapping[str, float]) -> tuple:
    scaled = _check_bifurcation_params("saddlenode", p)
    theta, k = p["theta"], p["k"]
    root_theta = math.sqrt(theta)
    _require(k > root_theta, "saddlenode: the wake state needs k > sqrt(theta)")
    D = [[1.0, 0.0], [0.0, p["d"]]]
    if scaled:
        reactions = [
            "2*u1 - u1^2 + (u1 - 1)*u2",
            "-k*theta^(-1/2)*u2 + (u1 - 1)*u2",
        ]
        return D, reactions, [[0.0, 0.0]], [[2.0, 0.0]]
    reactions = ["theta - u1^2 + u1*u2", "-k*u2 + u1*u2"]
    return D, reactions, [[-root_theta, 0.0]], [[root_theta, 0.0]]


def _parametric_gl(p: Mapping[str, float]) -> tuple:
    beta = p["beta"]
    _require(beta > 0, "parametric_gl: beta must be positive")
    reactions = [
        "u1 + beta*u1 - u1*(u1^2 + u2^2)",
        "u2 - beta*u2 - u2*(u1^2 + u2^2)",
    ]
    return np.eye(2).tolist(), reactions, [[0.0, 0.0]], [[math.sqrt(1 + beta), 0.0]]


def _lotka_volterra(p: Mapping[str, float]) -> tuple:
    a1, a2, r, sigma = p["a1"], p["a2"], p["r"], p["sigma"]
    _require(0 < a1 < 1 < a2, "lotka_volterra: parameters need 0 < a1 < 1 < a2")
    _require(r > 0, "lotka_volterra: r must be positive")
    _require(sigma > 0, "lotka_volterra: sigma must be positive")
    M = max(1.0, 2 * (1 - a1))
    if (a1 * a2 - M) * r > M * (2 - sigma) * (1 - a1) or sigma >= 2:
        _LOGGER.warning(
            "lotka_volterra: a1=%s a2=%s r=%s sigma=%s lie outside the pulled regime",
            a1,
            a2,
            r,
            sigma,
        )
    reactions = ["u1*(1 - u1 - a1*u2)", "r*u2*(1 - a2*u1 - u2)"]
    return [[1.0, 0.0], [0.0, sigma]], reactions, [[0.0, 1.0]], [[1.0, 0.0]]


def _tumor(p: Mapping[str, float]) -> tuple:
    _require(p["D"] > 0, "tumor: D must be positive")
    _require(0 < p["p_s"] <= 1, "tumor: p_s must lie in (0, 1]")
    _require(p["alpha"] >= 0, "tumor: alpha must be non-negative")
    reactions = [
        "p_s*gamma_u*(1 - u1 - u2)*u1",
        "(1 - p_s)*gamma_u*(1 - u1 - u2)*u1 + gamma_v*(1 - u1 - u2)*u2 - alpha*u2",
    ]
    D = [[p["D"], 0.0], [0.0, p["D"]]]
    return D, reactions, [[0.0, 0.0]], [[1.0, 0.0]]


_FAMILIES: dict[str, Callable[[Mapping[str, float]], tuple]] = {
    "kpp": _kpp,
    "transcritical": _transcritical,
    "pitchfork": _pitchfork,
    "saddlenode": _saddlenode,
    "parametric_gl": _parametric_gl,
    "lotka_volterra": _lotka_volterra,
    "tumor": _tumor,
}


def builtin(name: str, params: Mapping[str, float] | None = None) -> SystemSpec:
    """Return a builtin system.

    Args:
        name: One of BUILTIN_NAMES
        params: Overrides of the family defaults

    Returns:
        The populated SystemSpec with tagged equilibria

    Raises:
        SystemDefinitionError: Unknown name, unknown parameter or parameter out of range
    """
    if name not in _DEFAULTS:
        raise SystemDefinitionError(
            f"Unknown builtin system {name!r}; choose from {', '.join(BUILTIN_NAMES)}"
        )
    values = dict(_DEFAULTS[name])
    for key, value in (params or {}).items():
        if key not in values:
            raise SystemDefinitionError(f"{name}: unknown parameter {key!r}")
        values[key] = float(value)

    if name == "hidden_diffusion":
        return system_from_config(
            {
                CONF_NAME: name,
                CONF_N: 2,
                CONF_D: [[0.0, 0.0], [0.0, 0.0]],
                CONF_REACTIONS: ["0", "-u2"],
                CONF_EQUILIBRIA: [{"point": [0.0, 0.0], "role": ROLE_UNSTABLE}],
                CONF_ADVECTION: [[0.0, 1.0], [1.0, 0.0]],
                CONF_SYMBOL_ONLY: True,
            }
        )

    D, reactions, unstable, wake = _FAMILIES[name](values)
    equilibria = [{"point": point, "role": ROLE_UNSTABLE} for point in unstable]
    equilibria += [{"point": point, "role": ROLE_WAKE} for point in wake]
    return system_from_config(
        {
            CONF_NAME: name,
            CONF_N: len(D),
            CONF_D: D,
            CONF_REACTIONS: reactions,
            CONF_PARAMS: values,
            CONF_EQUILIBRIA: equilibria,
        }
    )
