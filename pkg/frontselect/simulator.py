"""Direct simulation of invasion fronts and Bramson-delay fitting."""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import logging
from pathlib import Path
from typing import Any, ClassVar

import numpy as np
from scipy import fft, sparse
from scipy.linalg import expm
from scipy.optimize import curve_fit
from scipy.sparse.linalg import splu

from .base import Report
from .config import validate_sim_config
from .const import (
    BLOW_UP_FACTOR,
    BURN_IN_TIME,
    DEFAULT_H_TRACK,
    DEFAULT_T,
    FIT_START_FRACTION,
    MIN_FIT_SAMPLES,
)
from .dispersion import SpreadingSpeedResult
from .exceptions import ConvergenceError, OutputError, SystemDefinitionError
from .front import FrontProfile
from .systems import SystemSpec
from .utils import smoothstep
from .weights import WeightSpec

_LOGGER = logging.getLogger(__name__)

FRAME_LAB = "lab"
FRAME_COMOVING = "comoving"
SCHEME_CNAB2 = "cnab2"
SCHEME_EULER = "euler"
SENSITIVITY_LEVELS = (0.25, 0.5, 0.75)
# Distance from the shifted front position over which cutoff-front data are switched off
FRONT_CUTOFF = 20.0
# Required clearance of the front from the right boundary at t_end, in units of 1/η_*
CLEARANCE = 50.0


@dataclass
class SimConfig:
    """Settings of one simulation run."""

    x_left: float
    x_right: float
    dx: float
    dt: float
    t_end: float
    initial: str = "step"
    x0: float = 0.0
    frame: str = FRAME_LAB
    scheme: str = SCHEME_CNAB2
    T: float = DEFAULT_T
    snapshot_every: float = 1.0
    h_track: float = DEFAULT_H_TRACK
    track_component: int = 0
    fit_start: float = FIT_START_FRACTION
    burn_in: float = BURN_IN_TIME

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SimConfig:
        """Validate a settings mapping and build the config.

        Raises:
            SystemDefinitionError: The settings do not match SIM_SCHEMA
        """
        return cls(**validate_sim_config(data))

    def to_dict(self) -> dict[str, Any]:
        """Settings as a plain mapping."""
        return asdict(self)

    @property
    def grid(self) -> np.ndarray:
        """Nodes including both boundary points."""
        m = int(round((self.x_right - self.x_left) / self.dx)) + 1
        return np.linspace(self.x_left, self.x_right, m)

    @property
    def steps(self) -> int:
        """Number of time steps."""
        return int(round(self.t_end / self.dt))

    @property
    def stride(self) -> int:
        """Time steps between snapshots."""
        return max(1, int(round(self.snapshot_every / self.dt)))


@dataclass
class Trajectory(Report):
    """Strided snapshots of the solution, stored in centered coordinates."""

    name: str
    times: np.ndarray
    x: np.ndarray
    values: np.ndarray
    origin: np.ndarray
    u_minus: np.ndarray
    config: SimConfig
    c_frame: float = 0.0
    delay: float = 0.0
    cfl: float = 0.0
    steps: int = 0

    export_exclude: ClassVar[tuple[str, ...]] = ("times", "x", "values")

    def to_dict(self) -> dict[str, Any]:
        """Summary without the snapshot arrays."""
        data = super().to_dict()
        data["snapshots"] = int(len(self.times))
        data["t_final"] = float(self.times[-1]) if len(self.times) else 0.0
        return data

    def lab_position(self, t: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Map positions in the simulation frame to the lab frame."""
        t = np.asarray(t, dtype=float)
        if self.config.frame == FRAME_LAB:
            return np.asarray(y, dtype=float)
        T = self.config.T
        return y + self.c_frame * t - self.delay * np.log((t + T) / T)

    def frame_position(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Map lab positions to the simulation frame."""
        t = np.asarray(t, dtype=float)
        if self.config.frame == FRAME_LAB:
            return np.asarray(x, dtype=float)
        T = self.config.T
        return x - self.c_frame * t + self.delay * np.log((t + T) / T)

    def to_csv(self, path: str | Path, stride: int = 1) -> Path:
        """Write one columnar file (t, x, u1..un) in the system's own coordinates."""
        path = Path(path)
        chosen = range(0, len(self.times), max(1, stride))
        blocks = [
            np.column_stack(
                [
                    np.full(len(self.x), self.times[i]),
                    self.x,
                    (self.values[i] + self.origin[:, None]).T,
                ]
            )
            for i in chosen
        ]
        header = ",".join(["t", "x"] + [f"u{j + 1}" for j in range(self.values.shape[1])])
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(path, np.vstack(blocks), delimiter=",", header=header, comments="")
        except OSError as err:
            raise OutputError(f"Could not write {path}: {err}") from err
        return path


def _difference_matrices(m: int, dx: float) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Second-order central first and second derivatives on m interior nodes."""
    first = sparse.diags([-1.0, 1.0], [-1, 1], shape=(m, m)) / (2 * dx)
    second = sparse.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(m, m)) / dx**2
    return first.tocsr(), second.tocsr()


def _initial_data(
    spec: SystemSpec,
    cfg: SimConfig,
    x: np.ndarray,
    u_minus: np.ndarray,
    front: FrontProfile | None,
    samples: np.ndarray | None,
) -> np.ndarray:
    """Centered initial state on the full grid, shape (n, len(x))."""
    if cfg.initial == "custom":
        if samples is None:
            raise SystemDefinitionError("custom initial data need samples")
        samples = np.asarray(samples, dtype=float)
        if samples.shape != (spec.n, len(x)):
            raise SystemDefinitionError(
                f"custom samples must have shape {(spec.n, len(x))}, got {samples.shape}"
            )
        return samples - spec.unstable_state[:, None]
    if cfg.initial == "front":
        if front is None:
            raise SystemDefinitionError("cutoff-front data need a solved front")
        cutoff = 1.0 - smoothstep((x - cfg.x0 - FRONT_CUTOFF) / 5.0)[0]
        return front.evaluate(x - cfg.x0) * cutoff
    return u_minus[:, None] * (x < cfg.x0)


def integrate(
    spec: SystemSpec,
    cfg: SimConfig,
    *,
    speed: SpreadingSpeedResult | None = None,
    front: FrontProfile | None = None,
    samples: np.ndarray | None = None,
) -> Trajectory:
    """Integrate u_t = D u_xx + B u_x + f(u) from steep initial data.

    Diffusion and constant transport are Crank-Nicolson, reaction and the
    logarithmic frame drift are second-order Adams-Bashforth; the first step
    treats them with forward Euler. Boundary values are u_- on the left and
    u_+ on the right.

    Args:
        spec: System in its own coordinates
        cfg: Simulation settings
        speed: Needed for the comoving frame and the clearance check
        front: Needed for cutoff-front data
        samples: Initial data of shape (n, len(cfg.grid)) for custom data

    Raises:
        SystemDefinitionError: Inconsistent settings or CFL violation
        ConvergenceError: Blow-up of the numerical solution
    """
    if spec.symbol_only:
        raise SystemDefinitionError(f"{spec.name} is symbol-only and cannot be simulated")
    centered = spec.centered()
    wake = centered.wake_state
    u_minus = np.zeros(spec.n) if wake is None else wake
    x = cfg.grid
    m = len(x) - 2
    n = spec.n

    c_frame = delay = 0.0
    if cfg.frame == FRAME_COMOVING:
        if speed is None:
            raise SystemDefinitionError("the comoving frame needs the spreading speed")
        c_frame, delay = speed.c_star, 1.5 / speed.eta_star
    elif speed is not None and cfg.initial != "custom":
        reach = cfg.x0 + speed.c_star * cfg.t_end + CLEARANCE / speed.eta_star
        if reach > cfg.x_right:
            _LOGGER.warning(
                "Front may come within %.3g of the right boundary; extend x_right beyond %.6g",
                CLEARANCE / speed.eta_star,
                reach,
            )

    max_diffusion = float(np.max(np.linalg.eigvals(spec.D).real))
    cfl = cfg.dt * 2 * max_diffusion / cfg.dx**2
    if cfg.scheme == SCHEME_EULER and cfl > 1.0:
        raise SystemDefinitionError(
            "explicit stepping needs dt <= dx²/(2 max eig D) = "
            f"{cfg.dx**2 / (2 * max_diffusion):.3g}"
        )

    first, second = _difference_matrices(m, cfg.dx)
    transport = spec.advection + c_frame * np.eye(n)
    linear = (sparse.kron(spec.D, second) + sparse.kron(transport, first)).tocsc()
    left = np.zeros((n, m))
    left[:, 0] = 1.0
    boundary = (
        (spec.D @ u_minus)[:, None] * left / cfg.dx**2
        - (transport @ u_minus)[:, None] * left / (2 * cfg.dx)
    ).ravel()
    drift_boundary = -(u_minus[:, None] * left / (2 * cfg.dx)).ravel()

    def explicit(w: np.ndarray, t: float) -> np.ndarray:
        values = centered.f(w.reshape(n, m)).ravel()
        if delay:
            gradient = (first @ w.reshape(n, m).T).T.ravel() + drift_boundary
            values = values - delay / (t + cfg.T) * gradient
        return values

    w = _initial_data(spec, cfg, x, u_minus, front, samples)[:, 1:-1].ravel()
    bound = BLOW_UP_FACTOR * (1.0 + float(np.max(np.abs(u_minus))))
    dt = cfg.dt
    identity = sparse.identity(n * m, format="csc")
    solver = splu((identity - 0.5 * dt * linear).tocsc())
    explicit_part = (identity + 0.5 * dt * linear).tocsr()

    def full(state: np.ndarray) -> np.ndarray:
        out = np.zeros((n, m + 2))
        out[:, 0] = u_minus
        out[:, 1:-1] = state.reshape(n, m)
        return out

    times = [0.0]
    snapshots = [full(w)]
    previous = None
    _LOGGER.debug(
        "Integrating %s: %d nodes, %d steps, scheme %s, frame %s",
        spec.name,
        m + 2,
        cfg.steps,
        cfg.scheme,
        cfg.frame,
    )
    for step in range(1, cfg.steps + 1):
        t = (step - 1) * dt
        current = explicit(w, t)
        if cfg.scheme == SCHEME_EULER:
            w = w + dt * (linear @ w + boundary + current)
        else:
            extrapolated = current if previous is None else 1.5 * current - 0.5 * previous
            w = solver.solve(explicit_part @ w + dt * (boundary + extrapolated))
            previous = current
        size = float(np.max(np.abs(w)))
        if not np.isfinite(size) or size > bound:
            raise ConvergenceError(
                f"{spec.name}: solution blew up at t = {step * dt:.6g} (sup-norm {size:.3g})"
            )
        if step % cfg.stride == 0 or step == cfg.steps:
            times.append(step * dt)
            snapshots.append(full(w))
    _LOGGER.info("%s: integrated to t=%g with %d snapshots", spec.name, times[-1], len(times))
    return Trajectory(
        name=spec.name,
        times=np.asarray(times),
        x=x,
        values=np.asarray(snapshots),
        origin=centered.origin,
        u_minus=u_minus,
        config=cfg,
        c_frame=c_frame,
        delay=delay,
        cfl=cfl,
        steps=cfg.steps,
    )


def integrate_many(
    runs: Sequence[tuple[SystemSpec, SimConfig, dict[str, Any]]],
    workers: int | None = None,
) -> list[Trajectory]:
    """Run independent simulations concurrently, in input order."""
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(integrate, spec, cfg, **kwargs) for spec, cfg, kwargs in runs]
        return [future.result() for future in futures]


def linear_sine_solution(
    D: np.ndarray, rate: np.ndarray, x: np.ndarray, initial: np.ndarray, t: float
) -> np.ndarray:
    """Exact solution of the semidiscrete w_t = D w_xx + Λ w with zero Dirichlet data.

    The discrete sine transform diagonalizes the three-point Laplacian, so each
    sine mode evolves by a matrix exponential.

    Args:
        D: Diffusion matrix
        rate: Reaction matrix Λ
        x: Full uniform grid including both boundary nodes
        initial: Values on the full grid, shape (n, len(x))
        t: Time
    """
    m = len(x) - 2
    dx = x[1] - x[0]
    modes = fft.dst(initial[:, 1:-1], type=1, axis=1)
    k = np.arange(1, m + 1)
    symbol = 4.0 / dx**2 * np.sin(k * np.pi / (2 * (m + 1))) ** 2
    evolved = np.stack(
        [expm(t * (rate - mu * D)) @ modes[:, i] for i, mu in enumerate(symbol)], axis=1
    )
    out = np.zeros_like(initial, dtype=float)
    out[:, 1:-1] = fft.idst(evolved, type=1, axis=1)
    return out


def fit_position(
    times: np.ndarray, positions: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """Least-squares fit of X(t) = c t - κ log t + x_∞.

    Returns:
        Parameters (c, κ, x_∞), their covariance and the RMS residual
    """
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)

    def model(t: np.ndarray, c: float, kappa: float, x_inf: float) -> np.ndarray:
        return c * t - kappa * np.log(t) + x_inf

    design = np.column_stack([times, -np.log(times), np.ones_like(times)])
    guess = np.linalg.lstsq(design, positions, rcond=None)[0]
    try:
        params, covariance = curve_fit(model, times, positions, p0=guess)
    except (RuntimeError, ValueError) as err:
        raise ConvergenceError(f"Front position fit failed: {err}") from err
    residual = float(np.sqrt(np.mean((model(times, *params) - positions) ** 2)))
    return params, covariance, residual


@dataclass
class FrontTrack(Report):
    """Tracked front positions with the fitted speed and delay."""

    times: np.ndarray
    positions: np.ndarray
    c_fit: float
    kappa_fit: float
    x_inf_fit: float
    covariance: np.ndarray
    fit_residual: float
    reliable: bool
    window: tuple[float, float]
    h_track: float
    monotone: bool
    truncated_at: float | None = None
    c_star: float | None = None
    kappa_theory: float | None = None

    export_exclude: ClassVar[tuple[str, ...]] = ("times", "positions")

    @property
    def errors(self) -> np.ndarray:
        """Standard errors of (c, κ, x_∞)."""
        return np.sqrt(np.abs(np.diag(self.covariance)))

    def position(self, t: np.ndarray) -> np.ndarray:
        """Fitted σ(t)."""
        t = np.asarray(t, dtype=float)
        return self.c_fit * t - self.kappa_fit * np.log(t) + self.x_inf_fit

    def to_csv(self, path: str | Path) -> Path:
        """Write plot data (t, X(t), X(t) - c_* t)."""
        path = Path(path)
        c = self.c_fit if self.c_star is None else self.c_star
        rows = np.column_stack([self.times, self.positions, self.positions - c * self.times])
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(path, rows, delimiter=",", header="t,X,X_minus_ct", comments="")
        except OSError as err:
            raise OutputError(f"Could not write {path}: {err}") from err
        return path


def crossing(x: np.ndarray, values: np.ndarray, level: float) -> float | None:
    """Rightmost point where values fall through level, linearly interpolated."""
    above = values >= level
    drops = np.flatnonzero(above[:-1] & ~above[1:])
    if len(drops) == 0:
        return None
    i = drops[-1]
    fraction = (values[i] - level) / (values[i] - values[i + 1])
    return float(x[i] + fraction * (x[i + 1] - x[i]))


def _positions(traj: Trajectory, h_track: float, component: int) -> tuple[list, list, float | None]:
    reference = traj.u_minus[component]
    if reference == 0:
        raise SystemDefinitionError(
            f"component {component + 1} of u_- vanishes; choose another track component"
        )
    times, positions = [], []
    truncated = None
    for t, snapshot in zip(traj.times, traj.values, strict=True):
        position = crossing(traj.x, snapshot[component] / reference, h_track)
        if position is None:
            truncated = float(t)
            _LOGGER.warning("No threshold crossing at t=%g; track truncated", t)
            break
        times.append(float(t))
        positions.append(float(traj.lab_position(t, position)))
    return times, positions, truncated


def track_front(
    traj: Trajectory,
    h_track: float | None = None,
    *,
    speed: SpreadingSpeedResult | None = None,
) -> FrontTrack:
    """Track the rightmost threshold crossing and fit c t - κ log t + x_∞.

    Raises:
        SystemDefinitionError: Fewer than the minimum number of samples in the fit window
    """
    cfg = traj.config
    h_track = cfg.h_track if h_track is None else h_track
    times, positions, truncated = _positions(traj, h_track, cfg.track_component)
    times_arr = np.asarray(times)
    positions_arr = np.asarray(positions)
    start = max(cfg.fit_start * cfg.t_end, 1e-12)
    window = times_arr >= start
    if np.sum(window) < MIN_FIT_SAMPLES:
        raise SystemDefinitionError(
            f"fit window [{start:g}, {cfg.t_end:g}] has {int(np.sum(window))} samples, "
            f"need {MIN_FIT_SAMPLES}; lower snapshot_every or raise t_end"
        )
    params, covariance, residual = fit_position(times_arr[window], positions_arr[window])
    reliable = residual <= 0.5 * cfg.dx
    if not reliable:
        _LOGGER.warning("Front fit residual %.3g exceeds half a grid cell", residual)
    late = times_arr > cfg.burn_in
    monotone = bool(np.all(np.diff(positions_arr[late]) >= -cfg.dx)) if np.sum(late) > 1 else True
    track = FrontTrack(
        times=times_arr,
        positions=positions_arr,
        c_fit=float(params[0]),
        kappa_fit=float(params[1]),
        x_inf_fit=float(params[2]),
        covariance=covariance,
        fit_residual=residual,
        reliable=bool(reliable),
        window=(float(start), float(times_arr[-1])),
        h_track=h_track,
        monotone=monotone,
        truncated_at=truncated,
        c_star=None if speed is None else speed.c_star,
        kappa_theory=None if speed is None else 1.5 / speed.eta_star,
    )
    _LOGGER.info(
        "%s: c_fit=%.6g kappa_fit=%.4g x_inf=%.4g (residual %.3g)",
        traj.name,
        track.c_fit,
        track.kappa_fit,
        track.x_inf_fit,
        residual,
    )
    return track


@dataclass
class SensitivityReport(Report):
    """Fits repeated at several threshold levels."""

    levels: list[float]
    c_fits: list[float]
    kappa_fits: list[float]
    x_inf_fits: list[float]
    c_spread: float
    kappa_spread: float
    consistent: bool


def track_sensitivity(
    traj: Trajectory, levels: Sequence[float] = SENSITIVITY_LEVELS
) -> SensitivityReport:
    """Repeat the tracker at several h_track; x_∞ may move, c and κ should not."""
    tracks = [track_front(traj, level) for level in levels]
    c = np.array([t.c_fit for t in tracks])
    kappa = np.array([t.kappa_fit for t in tracks])
    c_bar = max(2 * float(np.max([t.errors[0] for t in tracks])), 1e-3 * float(np.mean(np.abs(c))))
    kappa_bar = max(2 * float(np.max([t.errors[1] for t in tracks])), 0.05)
    c_spread = float(np.ptp(c))
    kappa_spread = float(np.ptp(kappa))
    consistent = c_spread <= c_bar and kappa_spread <= kappa_bar
    if not consistent:
        _LOGGER.warning(
            "Fit depends on the threshold: c spread %.3g, kappa spread %.3g",
            c_spread,
            kappa_spread,
        )
    return SensitivityReport(
        levels=list(levels),
        c_fits=c.tolist(),
        kappa_fits=kappa.tolist(),
        x_inf_fits=[t.x_inf_fit for t in tracks],
        c_spread=c_spread,
        kappa_spread=kappa_spread,
        consistent=bool(consistent),
    )


@dataclass
class ConvergenceReport(Report):
    """Weighted distance of the shifted solution to the critical front."""

    times: list[float]
    distances: list[float]
    epsilon: float
    t_star: float | None
    passed: bool
    decreasing: bool
    final: float
    best: float
    skipped: list[float] = field(default_factory=list)

    def to_csv(self, path: str | Path) -> Path:
        """Write (t, d(t)) rows."""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(
                path,
                np.column_stack([self.times, self.distances]),
                delimiter=",",
                header="t,distance",
                comments="",
            )
        except OSError as err:
            raise OutputError(f"Could not write {path}: {err}") from err
        return path


def compare_to_front(
    traj: Trajectory,
    front: FrontProfile,
    track: FrontTrack,
    weight: WeightSpec | None = None,
    epsilon: float = 0.1,
) -> ConvergenceReport:
    """d(t) = sup_x |ρ_{0,-1} ω (u(x + σ(t), t) - q_*(x))| over the fit window.

    The fitted σ locates the tracked threshold crossing, so the front is first
    shifted so that its own crossing sits at the origin. The supremum runs over
    [x_L, max(1, t^{1/4})] with x_L the left end of the front grid.
    """
    weight = WeightSpec(front.eta_star, 0.0, -1.0) if weight is None else weight
    component = traj.config.track_component
    reference = front.u_minus[component]
    own = crossing(front.grid, front.values[:, component] / reference, track.h_track)
    if own is None:
        raise ConvergenceError("front profile never crosses the tracking level")
    times, distances, skipped = [], [], []
    for t, snapshot in zip(traj.times, traj.values, strict=True):
        if t < track.window[0] or t <= 0:
            continue
        x = np.arange(front.grid[0], max(1.0, t**0.25) + front.h / 2, front.h)
        shift = traj.frame_position(t, track.position(t)) - own
        points = x + shift
        if points[0] < traj.x[0] or points[-1] > traj.x[-1]:
            skipped.append(float(t))
            continue
        u = np.stack([np.interp(points, traj.x, snapshot[j]) for j in range(snapshot.shape[0])])
        gap = np.max(np.abs(u - front.evaluate(x)), axis=0)
        times.append(float(t))
        distances.append(float(np.max(weight.rho(x) * weight.omega(x) * gap)))
    if skipped:
        _LOGGER.warning("%d snapshots skipped: shifted window outside the domain", len(skipped))
    if not distances:
        raise ConvergenceError("no snapshot could be compared with the front")
    d = np.asarray(distances)
    below = d < epsilon
    t_star = None
    if below[-1]:
        start = len(d) - int(np.argmin(below[::-1])) if not np.all(below) else 0
        t_star = times[start]
    decreasing = bool(len(d) < 2 or np.polyfit(times, np.log(np.maximum(d, 1e-300)), 1)[0] < 0)
    _LOGGER.info("%s: final weighted distance %.3g", traj.name, d[-1])
    return ConvergenceReport(
        times=times,
        distances=distances,
        epsilon=epsilon,
        t_star=t_star,
        passed=t_star is not None,
        decreasing=decreasing,
        final=float(d[-1]),
        best=float(np.min(d)),
        skipped=skipped,
    )
