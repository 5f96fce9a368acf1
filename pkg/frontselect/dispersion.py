"""Dispersion relation, pinched double roots and the linear spreading speed."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
import logging
from typing import Any, ClassVar

import numpy as np
from scipy import fft, linalg
from scipy.optimize import brentq, linear_sum_assignment, minimize_scalar

from .base import Report
from .const import (
    DEGENERATE_D02,
    DOUBLE_ROOT_RESIDUAL,
    FAR_FIELD_GAMMAS,
    HYP1_TOL,
    K_GRID_POINTS,
    NEWTON_MAX_ITER,
    NEWTON_TOL,
    OSCILLATORY_TOL,
    PINCH_MAX_BISECTIONS,
    PINCH_STEPS,
    POLE_THRESHOLD,
    SIGN_IMAG_TOL,
    SPEED_TOL,
)
from .exceptions import CapabilityError, ConvergenceError, HypothesisError
from .systems import SystemSpec, builtin
from .utils import extrapolate_to_zero, loglog_slope

_LOGGER = logging.getLogger(__name__)

_TAYLOR_RADIUS = 0.5


@dataclass(frozen=True, eq=False)
class SymbolPencil:
    """Matrix symbol M(λ, ν) = D(ν-η)² + (cI + B)(ν-η) + J - λI."""

    D: np.ndarray
    B: np.ndarray
    J: np.ndarray
    c: float
    eta: float = 0.0

    @classmethod
    def from_spec(cls, spec: SystemSpec, c: float, eta: float = 0.0) -> SymbolPencil:
        """Build the pencil of a centered system in a frame moving with speed c."""
        return cls(spec.D, spec.advection, spec.linearization, float(c), float(eta))

    @property
    def n(self) -> int:
        """Number of components."""
        return self.D.shape[0]

    def shifted(self, eta: float) -> SymbolPencil:
        """Return the same symbol with the spatial variable shifted by eta."""
        return SymbolPencil(self.D, self.B, self.J, self.c, float(eta))

    def coefficients(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return (A0, A10, A01, A02) with A(λ, ν) = A0 + A10 λ + A01 ν + A02 ν²."""
        eye = np.eye(self.n)
        transport = self.c * eye + self.B
        A0 = self.D * self.eta**2 - transport * self.eta + self.J
        A01 = -2.0 * self.eta * self.D + transport
        return A0, -eye, A01, self.D.copy()

    def matrix(self, lam: complex, nu: complex) -> np.ndarray:
        """Evaluate the symbol at one point."""
        mu = nu - self.eta
        eye = np.eye(self.n)
        return self.D * mu**2 + (self.c * eye + self.B) * mu + self.J - lam * eye

    def det(self, lam: complex, nu: complex) -> complex:
        """Determinant d(λ, ν) by LU factorization."""
        return complex(linalg.det(self.matrix(lam, nu)))

    def det_dnu(self, lam: complex, nu: complex) -> complex:
        """∂_ν d by Jacobi's formula, with an adjugate that stays finite at singular points."""
        M = self.matrix(lam, nu)
        dM = 2.0 * self.D * (nu - self.eta) + self.c * np.eye(self.n) + self.B
        U, sigma, Vh = linalg.svd(M)
        cofactors = np.array(
            [np.prod(np.delete(sigma, i)) for i in range(self.n)], dtype=complex
        )
        adjugate = (
            linalg.det(U) * linalg.det(Vh) * (Vh.conj().T * cofactors) @ U.conj().T
        )
        return complex(np.trace(adjugate @ dM))

    def taylor(self, lam: complex, nu: complex) -> np.ndarray:
        """Taylor coefficients c[j, k] of d about (λ, ν), exact for the polynomial d.

        Computed by a two-dimensional discrete Cauchy integral on circles.
        """
        n_lam, n_nu = self.n + 2, 2 * self.n + 2
        radius = _TAYLOR_RADIUS
        a = radius * np.exp(2j * np.pi * np.arange(n_lam) / n_lam)
        b = radius * np.exp(2j * np.pi * np.arange(n_nu) / n_nu)
        values = np.array([[self.det(lam + x, nu + y) for y in b] for x in a])
        coeffs = fft.fft2(values) / (n_lam * n_nu)
        powers = radius ** (np.arange(n_lam)[:, None] + np.arange(n_nu)[None, :])
        return coeffs / powers


def spatial_eigenvalues(pencil: SymbolPencil, lam: complex) -> np.ndarray:
    """All finite roots ν of d(λ, ν) = 0, sorted by real then imaginary part.

    Uses the generalized eigenproblem of the first-order linearization, so a
    singular D drops the infinite roots instead of failing.
    """
    n = pencil.n
    eye = np.eye(n)
    zero = np.zeros((n, n))
    K = pencil.J - lam * eye
    C = pencil.c * eye + pencil.B
    left = np.block([[zero, eye], [-K, -C]]).astype(complex)
    right = np.block([[eye, zero], [zero, pencil.D]]).astype(complex)
    roots = linalg.eigvals(left, right)
    roots = roots[np.isfinite(roots) & (np.abs(roots) < 1e12)] + pencil.eta
    return roots[np.lexsort((roots.imag, roots.real))]


@dataclass
class PinchingTrace(Report):
    """Homotopy trace of the two colliding spatial eigenvalues."""

    s_values: np.ndarray
    branches: np.ndarray
    s_max: float
    start_real_parts: tuple[float, float]
    pinched: bool
    bisections: int = 0

    export_exclude: ClassVar[tuple[str, ...]] = ("branches",)


@dataclass
class DoubleRoot(Report):
    """Solution of d = ∂_ν d = 0 with its expansion coefficients."""

    c: float
    lambda_dr: complex
    nu_dr: complex
    d10: complex
    d02: complex
    residual: float
    simple: bool
    pinched: bool = False
    trace: PinchingTrace | None = None

    export_exclude: ClassVar[tuple[str, ...]] = ("trace",)

    @property
    def sign_ok(self) -> bool:
        """Whether d10·d02 is real and negative."""
        product = self.d10 * self.d02
        real = abs(product.imag) < SIGN_IMAG_TOL * max(1.0, abs(product))
        return bool(real and product.real < 0)


def _newton_double_root(
    pencil: SymbolPencil, seed: tuple[complex, complex]
) -> tuple[complex, complex, float]:
    lam, nu = complex(seed[0]), complex(seed[1])
    for iteration in range(NEWTON_MAX_ITER):
        residual = np.array([pencil.det(lam, nu), pencil.det_dnu(lam, nu)])
        coeffs = pencil.taylor(lam, nu)
        jac = np.array(
            [[coeffs[1, 0], coeffs[0, 1]], [coeffs[1, 1], 2.0 * coeffs[0, 2]]]
        )
        try:
            step = np.linalg.solve(jac, -residual)
        except np.linalg.LinAlgError as err:
            raise ConvergenceError(
                f"Singular Newton matrix at λ={lam:.6g}, ν={nu:.6g}"
            ) from err
        lam, nu = lam + step[0], nu + step[1]
        _LOGGER.debug(
            "double root iteration %d: λ=%s ν=%s |step|=%.3g",
            iteration,
            lam,
            nu,
            np.linalg.norm(step),
        )
        if np.linalg.norm(step) < NEWTON_TOL * (1.0 + abs(lam) + abs(nu)):
            break
    else:
        raise ConvergenceError(
            f"Double-root Newton iteration did not converge in {NEWTON_MAX_ITER} steps "
            f"(c={pencil.c})"
        )
    residual = float(abs(pencil.det(lam, nu)) + abs(pencil.det_dnu(lam, nu)))
    return lam, nu, residual


def find_double_root(
    pencil: SymbolPencil, seed: tuple[complex, complex], pinching: bool = True
) -> DoubleRoot:
    """Solve {d = 0, ∂_ν d = 0} by Newton iteration from a seed.

    Args:
        pencil: Unshifted symbol at the speed of interest
        seed: Starting guess (λ, ν)
        pinching: Run verify_pinching on the converged root

    Returns:
        The double root with d10 = ∂_λ d and d02 = ½∂²_ν d

    Raises:
        ConvergenceError: No convergence within the iteration budget, or the
            converged residual exceeds the acceptance tolerance
    """
    lam, nu, residual = _newton_double_root(pencil, seed)
    if residual > DOUBLE_ROOT_RESIDUAL:
        raise ConvergenceError(
            f"Double root residual {residual:.3g} exceeds {DOUBLE_ROOT_RESIDUAL:g}"
        )
    coeffs = pencil.taylor(lam, nu)
    d10, d02 = complex(coeffs[1, 0]), complex(coeffs[0, 2])
    simple = abs(d02) > DEGENERATE_D02 and abs(d10) > DEGENERATE_D02
    if not simple:
        _LOGGER.warning(
            "Double root at λ=%s ν=%s is degenerate (d10=%s, d02=%s)", lam, nu, d10, d02
        )
    root = DoubleRoot(
        c=pencil.c,
        lambda_dr=lam,
        nu_dr=nu,
        d10=d10,
        d02=d02,
        residual=residual,
        simple=simple,
    )
    if pinching:
        root.trace = verify_pinching(pencil, root)
        root.pinched = root.trace.pinched
    return root


def _split(roots: np.ndarray, margin: float) -> tuple[int, int] | None:
    """Return (stable, unstable) root counts, or None if a root is near the axis."""
    if np.any(np.abs(roots.real) <= margin):
        return None
    return int(np.sum(roots.real < 0)), int(np.sum(roots.real > 0))


def _match(previous: np.ndarray, current: np.ndarray) -> tuple[np.ndarray, bool]:
    """Assign current roots to previous ones; flag ambiguous assignments."""
    cost = np.abs(previous[:, None] - current[None, :])
    rows, cols = linear_sum_assignment(cost)
    ordered = current[cols[np.argsort(rows)]]
    moved = np.abs(ordered - previous)
    if len(current) > 1:
        gaps = np.abs(current[:, None] - current[None, :])
        np.fill_diagonal(gaps, np.inf)
        separation = gaps.min(axis=1)[cols[np.argsort(rows)]]
        ambiguous = bool(np.any(moved > 0.5 * separation))
    else:
        ambiguous = False
    return ordered, ambiguous


def verify_pinching(pencil: SymbolPencil, root: DoubleRoot) -> PinchingTrace:
    """Check that the double root is a collision of a stable and an unstable root.

    Follows λ = λ_dr + s for s from S_max down to nearly zero, tracking all
    spatial eigenvalues, and reports the starting half-planes of the two roots
    that end at ν_dr.
    """
    singular_D = np.linalg.matrix_rank(pencil.D) < pencil.n

    def roots_at(s: float) -> np.ndarray:
        return spatial_eigenvalues(pencil, root.lambda_dr + s)

    # Grow S until every root sits clearly off the imaginary axis with a stable split
    s_max = 1.0
    for _ in range(60):
        current = roots_at(s_max)
        margin = 1e-6 * max(1.0, float(np.max(np.abs(current))))
        split = _split(current, margin)
        doubled = _split(roots_at(2 * s_max), margin)
        balanced = split is not None and (singular_D or split[0] == pencil.n)
        if balanced and split == doubled:
            break
        s_max *= 2.0
    else:
        raise ConvergenceError("No homotopy level separates the spatial eigenvalues")

    s_values = [s_max]
    branches = [roots_at(s_max)]
    bisections = 0
    grid = s_max * np.logspace(0, -8, PINCH_STEPS + 1)
    for s_to in grid[1:]:
        targets = [s_to]
        depth = 0
        while targets:
            s_next = targets[-1]
            candidate, ambiguous = _match(branches[-1], roots_at(s_next))
            if ambiguous and depth < PINCH_MAX_BISECTIONS:
                depth += 1
                bisections += 1
                targets.append(0.5 * (s_values[-1] + s_next))
                continue
            if ambiguous:
                _LOGGER.warning(
                    "Root tracking stayed ambiguous at s=%.3g after %d bisections",
                    s_next,
                    depth,
                )
            s_values.append(s_next)
            branches.append(candidate)
            targets.pop()

    tracked = np.array(branches)
    final = tracked[-1]
    pair = np.argsort(np.abs(final - root.nu_dr))[:2]
    start = (float(tracked[0, pair[0]].real), float(tracked[0, pair[1]].real))
    pinched = start[0] * start[1] < 0
    _LOGGER.debug(
        "Pinching at c=%s: S_max=%s, starting real parts %s, pinched=%s",
        pencil.c,
        s_max,
        start,
        pinched,
    )
    return PinchingTrace(
        s_values=np.array(s_values),
        branches=tracked[:, pair].T,
        s_max=s_max,
        start_real_parts=start,
        pinched=pinched,
        bisections=bisections,
    )


def expansion_residual_slope(
    pencil: SymbolPencil,
    root: DoubleRoot,
    steps: Sequence[float] = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4),
    stretch: float = 0.7,
) -> float | None:
    """Order of the remainder of d - [d10(λ-λ_dr) + d02(ν-ν_dr)²].

    Evaluated at (λ_dr + stretch·h², ν_dr + h). Returns None when the
    quadratic expansion is exact to rounding.
    """
    residuals = []
    for h in steps:
        lam, nu = root.lambda_dr + stretch * h**2, root.nu_dr + h
        model = root.d10 * stretch * h**2 + root.d02 * h**2
        residuals.append(abs(pencil.det(lam, nu) - model))
    scale = max(abs(root.d10), abs(root.d02))
    if max(residuals) < 1e-13 * scale:
        return None
    return loglog_slope(np.array(steps), np.array(residuals))


@dataclass
class SpreadingSpeedResult(Report):
    """Linear spreading speed, decay rate and the Hypothesis 1 verdicts."""

    c_star: float
    eta_star: float
    root: DoubleRoot
    hyp1_ii_ok: bool | None
    hyp1_iii_ok: bool | None
    witnesses: dict[str, Any] = field(default_factory=dict)
    grids: dict[str, Any] = field(default_factory=dict)
    ties: list[float] = field(default_factory=list)

    @property
    def nu_star(self) -> float:
        """Spatial rate ν_* = -η_*."""
        return -self.eta_star

    @property
    def passed(self) -> bool:
        """Whether every part of Hypothesis 1 holds."""
        root = self.root
        return bool(
            root.pinched and root.simple and root.sign_ok and self.hyp1_ii_ok and self.hyp1_iii_ok
        )

    @classmethod
    def from_root(
        cls, spec: SystemSpec, c: float, seed: tuple[complex, complex]
    ) -> SpreadingSpeedResult:
        """Wrap a double root found at a given speed, without Hypothesis 1 sampling.

        This is the entry point for symbol-only systems, whose marginal speed is
        prescribed rather than solved for.
        """
        pencil = SymbolPencil.from_spec(spec.centered(), c)
        root = find_double_root(pencil, seed)
        return cls(
            c_star=float(c),
            eta_star=float(-root.nu_dr.real),
            root=root,
            hyp1_ii_ok=None,
            hyp1_iii_ok=None,
        )

    def to_dict(self) -> dict[str, Any]:
        """Flatten the root data into the exported record."""
        data = super().to_dict()
        root = data.pop("root")
        data.update(
            {
                "lambda_dr": root["lambda_dr"],
                "nu_dr": root["nu_dr"],
                "d10": root["d10"],
                "d02": root["d02"],
                "pinched": root["pinched"],
                "simple": root["simple"],
                "sign_ok": self.root.sign_ok,
                "residual": root["residual"],
            }
        )
        return data


def _max_real_eig(D: np.ndarray, C: np.ndarray, J: np.ndarray, nu: complex) -> float:
    return float(np.max(np.linalg.eigvals(D * nu**2 + C * nu + J).real))


def _eta_bounds(spec: SystemSpec) -> tuple[float, float]:
    min_diffusion = float(np.min(np.linalg.eigvals(spec.D).real))
    scale = np.sqrt(max(1.0, np.linalg.norm(spec.linearization, 2) / min_diffusion))
    return 1e-3, 20.0 * scale


def _envelope_speed(spec: SystemSpec) -> tuple[float, float]:
    """Smallest speed of real exponential modes, min over η of Re λmax(Dη² - Bη + J)/η."""
    lo, hi = _eta_bounds(spec)

    def speed(log_eta: float) -> float:
        eta = np.exp(log_eta)
        return _max_real_eig(spec.D, -spec.advection, spec.linearization, eta) / eta

    found = minimize_scalar(speed, bounds=(np.log(lo), np.log(hi)), method="bounded",
                            options={"xatol": 1e-12})
    return float(found.fun), float(np.exp(found.x))


def _seed(spec: SystemSpec, c: float) -> tuple[complex, complex]:
    """Minimize the real growth rate over decaying real modes at speed c."""
    lo, hi = _eta_bounds(spec)
    C = c * np.eye(spec.n) + spec.advection

    def growth(eta: float) -> float:
        return _max_real_eig(spec.D, C, spec.linearization, -eta)

    found = minimize_scalar(growth, bounds=(lo, hi), method="bounded",
                            options={"xatol": 1e-12})
    return complex(found.fun), complex(-found.x)


def _check_hypothesis_1(
    pencil: SymbolPencil, nu_star: float, k_points: int, tol: float
) -> tuple[bool, bool, dict[str, Any], dict[str, Any]]:
    """Sample the symbol along ν = ik + ν_* for parts (ii) and (iii)."""
    D, C, J = pencil.D, pencil.c * np.eye(pencil.n) + pencil.B, pencil.J
    min_diffusion = float(np.min(np.linalg.eigvals(D).real))
    K = 10.0 * np.sqrt(max(1.0, np.linalg.norm(J, 2) / min_diffusion))
    k = np.linspace(-K, K, k_points)
    nu = 1j * k + nu_star
    stack = D[None] * nu[:, None, None] ** 2 + C[None] * nu[:, None, None] + J[None]
    eigenvalues = np.linalg.eigvals(stack)
    top = eigenvalues.real.max(axis=1)
    witnesses: dict[str, Any] = {}

    def top_eig(kk: float) -> complex:
        mu = 1j * kk + nu_star
        values = np.linalg.eigvals(D * mu**2 + C * mu + J)
        return complex(values[np.argmax(values.real)])

    # (iii): no unstable λ at any sampled k
    worst = int(np.argmax(top))
    iii_ok = bool(top[worst] <= tol)
    if not iii_ok:
        witnesses["hyp1_iii"] = {
            "k": float(k[worst]),
            "lambda": complex(eigenvalues[worst][np.argmax(eigenvalues[worst].real)]),
        }

    # (ii): λ = 0 only at k = 0, and simple there
    zero = k_points // 2
    at_zero = eigenvalues[zero]
    near_zero = np.abs(at_zero) < 1e-6
    ii_ok = bool(np.sum(near_zero) == 1 and np.all(at_zero[~near_zero].real < -tol))
    if not ii_ok:
        pool = at_zero[~near_zero] if np.sum(near_zero) == 1 else at_zero
        nearest = pool[np.argmax(pool.real)]
        witnesses["hyp1_ii"] = {
            "omega": float(nearest.imag),
            "k": 0.0,
            "eigenvalues": at_zero,
        }
    interior = [
        i
        for i in range(1, k_points - 1)
        if abs(i - zero) > 1 and top[i] >= top[i - 1] and top[i] >= top[i + 1]
    ]
    for i in interior:
        refined = minimize_scalar(
            lambda kk: -top_eig(kk).real, bounds=(k[i - 1], k[i + 1]), method="bounded"
        )
        peak = top_eig(float(refined.x))
        if peak.real >= -tol * 1e-3:
            ii_ok = False
            witnesses["hyp1_ii"] = {
                "omega": float(peak.imag),
                "k": float(refined.x),
                "re_lambda": float(peak.real),
            }
            break
    for i in (zero - 1, zero + 1):
        if top[i] >= 0:
            ii_ok = False
            peak = eigenvalues[i][np.argmax(eigenvalues[i].real)]
            witnesses["hyp1_ii"] = {
                "omega": float(peak.imag),
                "k": float(k[i]),
                "re_lambda": float(peak.real),
            }
    grids = {"k_max": float(K), "k_points": int(k_points)}
    return ii_ok, iii_ok, witnesses, grids


def solve_spreading_speed(
    spec: SystemSpec,
    c_bracket: tuple[float, float] | None = None,
    *,
    k_points: int = K_GRID_POINTS,
    tol: float = HYP1_TOL,
    samples: int = 9,
) -> SpreadingSpeedResult:
    """Solve for the linear spreading speed c_* and decay rate η_*.

    Args:
        spec: System (centered internally)
        c_bracket: Speeds bracketing the sign change of Re λ_dr(c); estimated
            from real exponential modes when omitted
        k_points: Size of the k-grid used for Hypothesis 1(ii)/(iii)
        tol: Tolerance on real parts in the Hypothesis 1 checks
        samples: Number of continuation points across the bracket

    Returns:
        The spreading speed result with Hypothesis 1 verdicts and witnesses

    Raises:
        CapabilityError: The system is symbol-only
        HypothesisError: The unstable state is linearly stable, the marginal
            double root is oscillatory or not pinched, d10·d02 is not real and
            negative, or η_* <= 0
        ConvergenceError: No sign change in the bracket or Newton failure
    """
    centered = spec.centered()
    if spec.symbol_only:
        raise CapabilityError(
            f"{spec.name} is symbol-only; use SpreadingSpeedResult.from_root"
        )
    growth = np.linalg.eigvals(centered.linearization)
    if np.max(growth.real) <= 0:
        raise HypothesisError(
            "1",
            "the linearization at the unstable state has no unstable eigenvalue",
            {"eigenvalues": growth},
        )

    c_est, eta_est = _envelope_speed(centered)
    if c_bracket is None:
        c_bracket = (0.5 * c_est, 1.5 * c_est)
    c_lo, c_hi = map(float, c_bracket)
    _LOGGER.debug("Speed estimate %.12g (η=%.6g), bracket [%s, %s]", c_est, eta_est, c_lo, c_hi)

    # Continue the double root across the bracket
    speeds = np.linspace(c_lo, c_hi, samples)
    roots: list[tuple[complex, complex]] = []
    for i, c in enumerate(speeds):
        pencil = SymbolPencil.from_spec(centered, c)
        if i >= 2:
            w = (c - speeds[i - 1]) / (speeds[i - 1] - speeds[i - 2])
            guess = tuple(roots[-1][j] + w * (roots[-1][j] - roots[-2][j]) for j in range(2))
        else:
            guess = _seed(centered, c)
        try:
            lam, nu, _ = _newton_double_root(pencil, guess)
        except ConvergenceError:
            lam, nu, _ = _newton_double_root(pencil, _seed(centered, c))
        roots.append((lam, nu))
    growth_rates = np.array([r[0].real for r in roots])
    crossings = np.nonzero(np.diff(np.sign(growth_rates)))[0]
    if len(crossings) == 0:
        raise ConvergenceError(
            f"Re λ_dr(c) does not change sign on [{c_lo}, {c_hi}] "
            f"(values {growth_rates.min():.3g}..{growth_rates.max():.3g})"
        )
    i = int(crossings[0])

    def marginal(c: float) -> float:
        w = (c - speeds[i]) / (speeds[i + 1] - speeds[i])
        guess = tuple((1 - w) * roots[i][j] + w * roots[i + 1][j] for j in range(2))
        lam, _, _ = _newton_double_root(SymbolPencil.from_spec(centered, c), guess)
        return lam.real

    c_star = brentq(marginal, speeds[i], speeds[i + 1], xtol=SPEED_TOL * 1e-4, rtol=1e-15)
    w = (c_star - speeds[i]) / (speeds[i + 1] - speeds[i])
    seed = tuple((1 - w) * roots[i][j] + w * roots[i + 1][j] for j in range(2))
    pencil = SymbolPencil.from_spec(centered, c_star)
    root = find_double_root(pencil, seed)

    if abs(root.lambda_dr.imag) > OSCILLATORY_TOL:
        raise HypothesisError(
            "1",
            "the marginal double root is oscillatory, which is outside the steady-front scope",
            {"c": c_star, "lambda_dr": root.lambda_dr},
        )
    if not root.pinched:
        raise HypothesisError(
            "1(i)", "the marginal double root is not pinched", {"c": c_star, "nu_dr": root.nu_dr}
        )
    eta_star = -root.nu_dr.real
    if eta_star <= 0:
        raise HypothesisError("1", "the decay rate η_* is not positive", {"eta_star": eta_star})
    if not root.sign_ok:
        raise HypothesisError(
            "1(i)",
            "d10*d02 is not real and negative at the marginal double root",
            {"c": c_star, "d10": root.d10, "d02": root.d02},
        )

    ii_ok, iii_ok, witnesses, grids = _check_hypothesis_1(pencil, root.nu_dr.real, k_points, tol)
    grids["c_bracket"] = [c_lo, c_hi]
    ties = _ties(centered, c_star, eta_star)
    _LOGGER.info(
        "%s: c_*=%.12g η_*=%.12g pinched=%s hyp1(ii)=%s hyp1(iii)=%s",
        spec.name,
        c_star,
        eta_star,
        root.pinched,
        ii_ok,
        iii_ok,
    )
    return SpreadingSpeedResult(
        c_star=float(c_star),
        eta_star=float(eta_star),
        root=root,
        hyp1_ii_ok=ii_ok,
        hyp1_iii_ok=iii_ok,
        witnesses=witnesses,
        grids=grids,
        ties=ties,
    )


def _ties(spec: SystemSpec, c_star: float, eta_star: float) -> list[float]:
    """Other decay rates whose real modes are marginal at the same speed."""
    lo, hi = _eta_bounds(spec)
    etas = np.geomspace(lo, hi, 400)
    C = c_star * np.eye(spec.n) + spec.advection
    growth = np.array([_max_real_eig(spec.D, C, spec.linearization, -e) for e in etas])
    ties = []
    for i in range(1, len(etas) - 1):
        if growth[i] <= growth[i - 1] and growth[i] <= growth[i + 1]:
            if abs(growth[i]) < 1e-6 and abs(etas[i] - eta_star) > 0.05 * eta_star:
                ties.append(float(etas[i]))
    if ties:
        _LOGGER.warning("Simultaneously marginal double roots near η=%s", ties)
    return ties


@dataclass
class FarFieldReport(Report):
    """Small spatial eigenvalues near λ = 0 and the pole of the projections."""

    gammas: list[float]
    nu_plus: list[complex]
    nu_minus: list[complex]
    slope: float
    expected_slope: float
    slope_error: float
    pole: np.ndarray
    pole_block_norm: float
    nondegenerate: bool


def far_field_expansion(
    pencil: SymbolPencil,
    root: DoubleRoot,
    gammas: Sequence[float] = FAR_FIELD_GAMMAS,
) -> FarFieldReport:
    """Expansion of the small spatial eigenvalues of L_+ - γ² in γ.

    Args:
        pencil: Symbol at c_* shifted by η_*
        root: Marginal double root supplying d10 and d02
        gammas: Small positive samples

    Raises:
        CapabilityError: D is singular, so the first-order matrix does not exist
        HypothesisError: d10·d02 is not real and negative
        ConvergenceError: The two small eigenvalues cannot be separated from the rest
        ValueError: A sample γ is zero
    """
    if any(g == 0 for g in gammas):
        raise ValueError("γ = 0 is excluded: the spectral projections have a pole there")
    n = pencil.n
    try:
        D_inv = linalg.inv(pencil.D)
    except linalg.LinAlgError as err:
        raise CapabilityError("Far-field expansion needs an invertible D") from err
    if not root.sign_ok:
        raise HypothesisError(
            "1(i)",
            "the far-field slope needs d10*d02 real and negative",
            {"d10": root.d10, "d02": root.d02},
        )
    A0, _, A01, _ = pencil.coefficients()
    eye, zero = np.eye(n), np.zeros((n, n))

    nu_plus, nu_minus, slopes, poles = [], [], [], []
    for gamma in gammas:
        M = np.block([[zero, eye], [-D_inv @ (A0 - gamma**2 * eye), -D_inv @ A01]])
        values, left, right = linalg.eig(M, left=True, right=True)
        order = np.argsort(np.abs(values))
        if len(values) > 2 and abs(values[order[2]]) < 10 * abs(values[order[1]]):
            raise ConvergenceError(
                f"Small spatial eigenvalues are not separated at γ={gamma}"
            )
        pair = sorted(order[:2], key=lambda j: values[j].real)
        projections = []
        for j in pair:
            r, l = right[:, j], left[:, j]
            projections.append(np.outer(r, l.conj()) / (l.conj() @ r))
        nu_minus.append(complex(values[pair[0]]))
        nu_plus.append(complex(values[pair[1]]))
        slopes.append(values[pair[1]] / gamma)
        poles.append(gamma * (projections[1] - projections[0]) / 2.0)

    slope = float(extrapolate_to_zero(np.array(gammas), slopes).real)
    pole = extrapolate_to_zero(np.array(gammas), poles)
    expected = float(np.sqrt(-(root.d10 / root.d02).real))
    block = float(np.linalg.norm(pole[:n, n:], 2))
    return FarFieldReport(
        gammas=list(gammas),
        nu_plus=nu_plus,
        nu_minus=nu_minus,
        slope=slope,
        expected_slope=expected,
        slope_error=abs(slope - expected),
        pole=pole,
        pole_block_norm=block,
        nondegenerate=block > POLE_THRESHOLD,
    )


@dataclass
class SpeedScan(Report):
    """Spreading speeds over a parameter sweep."""

    family: str
    parameter: str
    values: list[float]
    speeds: list[float]
    monotone: bool


def speed_scan(
    family: str,
    parameter: str,
    values: Sequence[float],
    params: dict[str, float] | None = None,
) -> SpeedScan:
    """Evaluate c_* of a builtin family across values of one parameter."""
    speeds = []
    for value in values:
        spec = builtin(family, {**(params or {}), parameter: value})
        speeds.append(solve_spreading_speed(spec).c_star)
    steps = np.diff(speeds)
    monotone = bool(np.all(steps > 0) or np.all(steps < 0))
    _LOGGER.info("Speed scan of %s over %s: monotone=%s", family, parameter, monotone)
    return SpeedScan(family, parameter, list(map(float, values)), speeds, monotone)
