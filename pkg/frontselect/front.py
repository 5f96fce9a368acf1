"""Critical front q_* by a far-field/core Newton solve, and wake stability."""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
from pathlib import Path
from typing import Any, ClassVar

import numpy as np
from scipy import sparse
from scipy.interpolate import BPoly
from scipy.sparse.linalg import spsolve

from .base import Report
from .const import (
    BOUNDARY_TOL,
    DEFAULT_DOMAIN,
    DEFAULT_SPACING,
    FRONT_NEWTON_MAX_ITER,
    FRONT_RESIDUAL_TOL,
    K_GRID_POINTS,
    PUSHED_B_TOL,
    WAKE_MARGIN,
)
from .dispersion import SpreadingSpeedResult
from .exceptions import CapabilityError, ConvergenceError, HypothesisError, OutputError
from .normal_form import PencilData
from .systems import SystemSpec
from .utils import fourth_order_matrices, smoothstep

_LOGGER = logging.getLogger(__name__)


@dataclass
class FrontProfile(Report):
    """Discretized critical front with its leading-edge constants.

    Values are stored in coordinates centered at the unstable state; the
    tail is q(x) = [(u0 x + u1) + a u0] e^{-η_* x} beyond the grid.
    """

    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    c_star: float
    eta_star: float
    a: float
    u0: np.ndarray
    u1: np.ndarray
    u_minus: np.ndarray
    D: np.ndarray
    transport: np.ndarray
    residual_norm: float
    boundary_mismatch: float
    window: tuple[float, float]
    tail_rate: float
    b_raw: float
    newton_steps: int
    origin: np.ndarray = field(default_factory=lambda: np.zeros(0))
    spec: SystemSpec | None = None

    export_exclude: ClassVar[tuple[str, ...]] = ("grid", "values", "derivative", "spec")

    @property
    def h(self) -> float:
        """Grid spacing."""
        return float(self.grid[1] - self.grid[0])

    @property
    def n(self) -> int:
        """Number of components."""
        return self.values.shape[1]

    def __post_init__(self) -> None:
        """Build the Hermite interpolant through values, slopes and ODE curvatures."""
        second = self._curvature(self.values.T, self.derivative.T).T
        self._interpolants = [
            BPoly.from_derivatives(
                self.grid,
                np.stack([self.values[:, j], self.derivative[:, j], second[:, j]], axis=1),
            )
            for j in range(self.n)
        ]

    def _curvature(self, q: np.ndarray, dq: np.ndarray) -> np.ndarray:
        """q'' = -D^{-1}((cI + B) q' + f(q)) for arrays of shape (n, ...)."""
        forcing = np.einsum("ij,j...->i...", self.transport, dq) + self.spec.f(q)
        return -np.linalg.solve(self.D, forcing.reshape(self.n, -1)).reshape(q.shape)

    def tail(self, x: np.ndarray, nu: int = 0) -> np.ndarray:
        """Leading-edge asymptotics and its derivatives, shape (n, len(x))."""
        x = np.asarray(x, dtype=float)
        eta = self.eta_star
        decay = np.exp(-eta * x)
        p = self.u0[:, None] * (x + self.a) + self.u1[:, None]
        dp = np.broadcast_to(self.u0[:, None], p.shape)
        if nu == 0:
            return p * decay
        if nu == 1:
            return (dp - eta * p) * decay
        return (eta**2 * p - 2 * eta * dp) * decay

    def evaluate(self, x: np.ndarray, nu: int = 0) -> np.ndarray:
        """Evaluate q or its first two derivatives at arbitrary points, shape (n, len(x)).

        The second derivative comes from the traveling-wave equation.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if nu == 2:
            return self._curvature(self.evaluate(x), self.evaluate(x, 1))
        inside = np.clip(x, self.grid[0], self.grid[-1])
        result = np.stack([interp(inside, nu) for interp in self._interpolants])
        left = x < self.grid[0]
        right = x > self.grid[-1]
        if np.any(left):
            result[:, left] = self.u_minus[:, None] if nu == 0 else 0.0
        if np.any(right):
            result[:, right] = self.tail(x[right], nu)
        return result

    def to_csv(self, path: str | Path) -> Path:
        """Write x and the components in the system's own coordinates."""
        path = Path(path)
        columns = np.column_stack([self.grid, self.values + self.origin])
        header = ",".join(["x"] + [f"q{j + 1}" for j in range(self.n)])
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(path, columns, delimiter=",", header=header, comments="")
        except OSError as err:
            raise OutputError(f"Could not write {path}: {err}") from err
        return path


class _FrontSystem:
    """Discretized traveling-wave equation with the far-field/core ansatz."""

    def __init__(
        self,
        spec: SystemSpec,
        c: float,
        eta: float,
        u0: np.ndarray,
        u1: np.ndarray,
        u_minus: np.ndarray,
        x: np.ndarray,
    ) -> None:
        self.spec = spec
        self.n = spec.n
        self.x = x
        self.m = len(x)
        self.u_minus = u_minus
        h = x[1] - x[0]
        self.D1, self.D2 = fourth_order_matrices(self.m, h)
        self.transport = c * np.eye(self.n) + spec.advection
        eye = sparse.identity(self.n, format="csr")
        self.linear = (
            sparse.kron(self.D2, sparse.csr_matrix(spec.D))
            + sparse.kron(self.D1, sparse.csr_matrix(self.transport))
        ).tocsr()
        self.d1_full = sparse.kron(self.D1, eye).tocsr()

        # Cutoffs χ+ rising on [-1, 1] and χ- = 1 - χ+
        s, ds, dds = smoothstep((x + 1.0) / 2.0)
        chi = (s, ds / 2.0, dds / 4.0)
        decay = np.where(x > -1.0, np.exp(-eta * np.maximum(x, -1.0)), 0.0)
        left = u_minus[:, None]
        self.wake = [left * (1.0 - chi[0]), -left * chi[1], -left * chi[2]]
        e0, e1 = u0[:, None], u1[:, None]
        self.basis = {
            "beta": self._tail_basis(chi, decay, eta, e0 * x + e1, e0),
            "alpha": self._tail_basis(chi, decay, eta, e0 * np.ones_like(x), 0.0 * e0),
        }
        self.interior = np.arange(self.n, (self.m - 1) * self.n)
        self.pin_component = int(np.argmax(np.abs(u_minus)))
        self.pin_node = int(np.argmin(np.abs(x)))
        self.u0 = u0

    @staticmethod
    def _tail_basis(chi, decay, eta, p, dp) -> list[np.ndarray]:
        g0 = chi[0] * p * decay
        g1 = (chi[1] * p + chi[0] * (dp - eta * p)) * decay
        g2 = (
            chi[2] * p
            + 2 * chi[1] * (dp - eta * p)
            + chi[0] * (-2 * eta * dp + eta**2 * p)
        ) * decay
        return [g0, g1, g2]

    def profile(self, z: np.ndarray, nu: int = 0) -> np.ndarray:
        """q or its derivative as an (n, m) array; nu in {0, 1}."""
        w = z[: self.n * self.m]
        alpha, beta = z[-2], z[-1]
        if nu == 0:
            core = w.reshape(self.m, self.n).T
        else:
            core = (self.d1_full @ w).reshape(self.m, self.n).T
        tail = alpha * self.basis["alpha"][nu] + beta * self.basis["beta"][nu]
        return core + self.wake[nu] + tail

    def _operator(self, g: list[np.ndarray], jac: np.ndarray | None = None) -> np.ndarray:
        """Apply D∂² + (cI+B)∂ (+ f'(q)) to a field given with its derivatives."""
        out = self.spec.D @ g[2] + self.transport @ g[1]
        if jac is not None:
            out = out + np.einsum("ijm,jm->im", jac, g[0])
        return out

    def residual(self, z: np.ndarray) -> np.ndarray:
        n, m = self.n, self.m
        w = z[: n * m]
        alpha, beta = z[-2], z[-1]
        q = self.profile(z)
        known = self._operator(self.wake) + alpha * self._operator(self.basis["alpha"]) \
            + beta * self._operator(self.basis["beta"])
        full = self.linear @ w + known.T.ravel() + self.spec.f(q).T.ravel()
        boundary = np.concatenate([w[:n], w[-n:]])
        derivative = (self.d1_full @ w)[-n:] @ self.u0
        k, i = self.pin_component, self.pin_node
        pin = q[k, i] - 0.5 * self.u_minus[k]
        return np.concatenate([full[self.interior], boundary, [derivative, pin]])

    def jacobian(self, z: np.ndarray) -> sparse.csr_matrix:
        n, m = self.n, self.m
        q = self.profile(z)
        jac = self.spec.jacobian(q)
        local = sparse.block_diag([jac[:, :, i] for i in range(m)], format="csr")
        core = (self.linear + local)[self.interior]
        columns = [
            self._operator(self.basis[key], jac).T.ravel()[self.interior]
            for key in ("alpha", "beta")
        ]
        top = sparse.hstack([core, sparse.csr_matrix(np.column_stack(columns))])

        size = n * m
        rows = []
        selector = sparse.lil_matrix((2 * n, size + 2))
        for j in range(n):
            selector[j, j] = 1.0
            selector[n + j, size - n + j] = 1.0
        rows.append(selector.tocsr())
        last = self.D1[self.m - 1].toarray().ravel()
        derivative_row = np.concatenate([np.kron(last, self.u0), [0.0, 0.0]])
        k, i = self.pin_component, self.pin_node
        pin_row = np.zeros(size + 2)
        pin_row[i * n + k] = 1.0
        pin_row[-2] = self.basis["alpha"][0][k, i]
        pin_row[-1] = self.basis["beta"][0][k, i]
        rows.append(sparse.csr_matrix(np.vstack([derivative_row, pin_row])))
        return sparse.vstack([top] + rows, format="csr")


def _newton(system: _FrontSystem, z: np.ndarray, max_iter: int) -> tuple[np.ndarray, int]:
    norm = np.max(np.abs(system.residual(z)))
    for step in range(1, max_iter + 1):
        try:
            delta = spsolve(system.jacobian(z), -system.residual(z))
        except RuntimeError as err:
            raise ConvergenceError(f"Front Newton step {step}: singular Jacobian") from err
        if not np.all(np.isfinite(delta)):
            raise ConvergenceError(f"Front Newton step {step}: non-finite update")
        damping = 1.0
        while True:
            trial = z + damping * delta
            trial_norm = np.max(np.abs(system.residual(trial)))
            if trial_norm < (1 - 1e-4 * damping) * norm or damping < 1 / 64:
                break
            damping /= 2
        z, norm = trial, trial_norm
        _LOGGER.debug("front Newton %d: residual %.3g damping %.3g", step, norm, damping)
        if norm < 1e-2 * FRONT_RESIDUAL_TOL or np.max(np.abs(damping * delta)) < 1e-13:
            return z, step
    raise ConvergenceError(
        f"Front Newton iteration did not converge in {max_iter} steps (residual {norm:.3g})"
    )


def solve_front(
    spec: SystemSpec,
    speed: SpreadingSpeedResult,
    pencil: PencilData,
    domain: tuple[float, float] = DEFAULT_DOMAIN,
    h: float = DEFAULT_SPACING,
    *,
    max_iter: int = FRONT_NEWTON_MAX_ITER,
) -> FrontProfile:
    """Solve the critical traveling-wave problem D q'' + c_* q' + f(q) = 0.

    Args:
        spec: System with a tagged wake state
        speed: Spreading speed result supplying c_* and η_*
        pencil: Pencil data supplying u0 and u1
        domain: Truncated interval [x_L, x_R]
        h: Grid spacing
        max_iter: Newton iteration budget

    Returns:
        The front, translated so that the linear-growth coefficient is 1

    Raises:
        CapabilityError: The system is symbol-only
        ConvergenceError: Newton failure
        HypothesisError: The linear-growth coefficient vanishes (pushed front)
    """
    if spec.symbol_only:
        raise CapabilityError(f"{spec.name} is symbol-only; fronts need a parabolic system")
    centered = spec.centered()
    u_minus = centered.wake_state
    if u_minus is None:
        raise HypothesisError("3", f"{spec.name} has no equilibrium tagged as wake state")
    x_left, x_right = domain
    m = int(round((x_right - x_left) / h)) + 1
    x = np.linspace(x_left, x_right, m)
    c, eta = speed.c_star, speed.eta_star
    system = _FrontSystem(centered, c, eta, pencil.u0, pencil.u1, u_minus, x)

    z0 = np.zeros(spec.n * m + 2)
    z0[-1] = 1.0
    z, steps = _newton(system, z0, max_iter)

    q = system.profile(z)
    dq = system.profile(z, 1)
    full = system.linear @ z[:-2] + (
        system._operator(system.wake)
        + z[-2] * system._operator(system.basis["alpha"])
        + z[-1] * system._operator(system.basis["beta"])
    ).T.ravel() + centered.f(q).T.ravel()
    residual_norm = float(np.max(np.abs(full[system.interior])))

    alpha, beta = float(z[-2]), float(z[-1])
    if beta < PUSHED_B_TOL:
        raise HypothesisError(
            "2",
            "the front has no linear-growth component in its tail (pushed-front suspicion)",
            {"b": beta, "alpha": alpha},
        )
    shift = np.log(beta) / eta
    a = alpha / beta + shift
    grid = x - shift

    w = z[:-2].reshape(m, spec.n)
    edge = max(5, m // 100)
    boundary_mismatch = float(max(np.max(np.abs(w[:edge])), np.max(np.abs(w[-edge:]))))
    if boundary_mismatch > BOUNDARY_TOL:
        _LOGGER.warning(
            "Front core is %.3g at the domain edges; consider a larger domain",
            boundary_mismatch,
        )

    profile = FrontProfile(
        grid=grid,
        values=q.T.copy(),
        derivative=dq.T.copy(),
        c_star=c,
        eta_star=eta,
        a=float(a),
        u0=pencil.u0,
        u1=pencil.u1,
        u_minus=u_minus,
        D=centered.D,
        transport=system.transport,
        residual_norm=residual_norm,
        boundary_mismatch=boundary_mismatch,
        window=(0.0, 0.0),
        tail_rate=float("nan"),
        b_raw=beta,
        newton_steps=steps,
        origin=centered.origin,
        spec=centered,
    )
    profile.window, profile.tail_rate = _tail_fit(profile)
    _LOGGER.info(
        "%s front: a=%.10g residual=%.3g after %d Newton steps",
        spec.name,
        profile.a,
        residual_norm,
        steps,
    )
    return profile


def _tail_fit(front: FrontProfile) -> tuple[tuple[float, float], float]:
    """Fit the extra decay of q minus its leading-edge asymptotics."""
    x = front.grid
    width = min(20.0 / front.eta_star, (x[-1] - x[0]) / 4.0)
    window = (float(x[-1] - width), float(x[-1] - width / 2.0))
    mask = (x >= window[0]) & (x <= window[1])
    remainder = np.linalg.norm(front.values[mask].T - front.tail(x[mask]), axis=0)
    scaled = remainder * np.exp(front.eta_star * x[mask])
    usable = scaled > 1e-300
    if np.sum(usable) < 2:
        return window, float("inf")
    slope = np.polyfit(x[mask][usable], np.log(scaled[usable]), 1)[0]
    rate = float(-slope)
    if rate <= 0:
        _LOGGER.warning("Front tail remainder does not decay faster than the asymptotics")
    return window, rate


@dataclass
class WakeVerdict(Report):
    """Essential spectrum of the linearization at the wake state."""

    stable: bool
    margin: float
    k_max: float
    point: np.ndarray
    k_grid: dict[str, Any]


def check_wake_stability(
    spec: SystemSpec,
    speed: SpreadingSpeedResult,
    point: np.ndarray | None = None,
    *,
    delta: float = WAKE_MARGIN,
    k_points: int = K_GRID_POINTS,
) -> WakeVerdict:
    """Check that D(ik)² + c_*(ik) + f'(u_-) is strictly stable for all sampled k.

    Args:
        spec: System (uncentered coordinates)
        speed: Spreading speed result supplying c_*
        point: State to test; the tagged wake state by default
        delta: Required spectral margin
        k_points: Number of wavenumbers on the sampled grid
    """
    if point is None:
        point = spec.wake_state
        if point is None:
            raise HypothesisError("3", f"{spec.name} has no equilibrium tagged as wake state")
    point = np.asarray(point, dtype=float)
    J = spec.jacobian(point)
    min_diffusion = float(np.min(np.linalg.eigvals(spec.D).real))
    K = 10.0 * np.sqrt(max(1.0, np.linalg.norm(J, 2) / min_diffusion))
    k = np.linspace(-K, K, k_points)
    transport = speed.c_star * np.eye(spec.n) + spec.advection
    stack = (
        -spec.D[None] * k[:, None, None] ** 2
        + 1j * k[:, None, None] * transport[None]
        + J[None]
    )
    top = np.linalg.eigvals(stack).real.max(axis=1)
    worst = int(np.argmax(top))
    margin = float(-top[worst])
    stable = margin > delta
    _LOGGER.info("Wake stability at %s: margin %.6g (k=%.3g)", point, margin, k[worst])
    return WakeVerdict(
        stable=stable,
        margin=margin,
        k_max=float(k[worst]),
        point=point,
        k_grid={"k_max": float(K), "k_points": int(k_points)},
    )
