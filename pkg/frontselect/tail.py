"""Self-similar diffusive tail, matched approximate solution and its residual."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
import logging
from math import comb, factorial
from pathlib import Path
from typing import Any, ClassVar
import warnings

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import sparse
from scipy.interpolate import BPoly
from scipy.sparse.linalg import MatrixRankWarning, eigs, spsolve

from .base import Report
from .const import (
    CASE_COLINEAR,
    CASE_INDEPENDENT,
    DEFAULT_MU,
    DEFAULT_T,
    MATCHING_FLOOR,
    XI_MAX,
    XI_STEP,
)
from .exceptions import ConvergenceError, OutputError, SystemDefinitionError
from .front import FrontProfile
from .normal_form import NormalForm
from .systems import SystemSpec
from .utils import fourth_order_matrices, loglog_slope, smoothstep
from .weights import WeightSpec

_LOGGER = logging.getLogger(__name__)

# log ω above which ω⁻¹v is treated as zero in the nonlinearity
_LOG_OMEGA_CAP = 600.0


class Profile:
    """Vector-valued function of ξ whose derivatives can be evaluated to any order."""

    size: int

    def derivatives(self, xi: np.ndarray, order: int) -> np.ndarray:
        """Return the jets ∂^k ψ(ξ) for k = 0..order, shape (order + 1, size, len(ξ))."""
        raise NotImplementedError

    def __call__(self, xi: np.ndarray, nu: int = 0) -> np.ndarray:
        """Evaluate the nu-th derivative, shape (size, len(ξ))."""
        return self.derivatives(np.atleast_1d(np.asarray(xi, dtype=float)), nu)[nu]


class PolyGaussian(Profile):
    """p(ξ) e^{-ξ²/4} with a vector polynomial p, coefficients of shape (degree + 1, size)."""

    def __init__(self, coefficients: np.ndarray) -> None:
        self.coefficients = np.atleast_2d(np.asarray(coefficients, dtype=float))
        self.size = self.coefficients.shape[1]

    @classmethod
    def zero(cls, size: int) -> PolyGaussian:
        """The zero profile with the given number of components."""
        return cls(np.zeros((1, size)))

    def derivative(self) -> PolyGaussian:
        """(p g)' = (p' - ξ p / 2) g."""
        c = self.coefficients
        dp = P.polyder(c, axis=0) if len(c) > 1 else np.zeros_like(c)
        shifted = np.vstack([np.zeros((1, self.size)), c])
        out = -0.5 * shifted
        out[: len(dp)] += dp
        return PolyGaussian(out)

    def times_xi(self) -> PolyGaussian:
        """ξ p(ξ) g(ξ)."""
        return PolyGaussian(np.vstack([np.zeros((1, self.size)), self.coefficients]))

    def transform(self, matrix: np.ndarray) -> PolyGaussian:
        """Apply a constant (out, size) matrix to the components."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return PolyGaussian(self.coefficients @ matrix.T)

    def __add__(self, other: PolyGaussian) -> PolyGaussian:
        a, b = self.coefficients, other.coefficients
        out = np.zeros((max(len(a), len(b)), self.size))
        out[: len(a)] += a
        out[: len(b)] += b
        return PolyGaussian(out)

    def __sub__(self, other: PolyGaussian) -> PolyGaussian:
        return self + other.transform(-np.eye(other.size))

    def derivatives(self, xi: np.ndarray, order: int) -> np.ndarray:
        gauss = np.exp(-(xi**2) / 4.0)
        jets = []
        current: PolyGaussian = self
        for _ in range(order + 1):
            jets.append(P.polyval(xi, current.coefficients) * gauss)
            current = current.derivative()
        return np.stack(jets)


class NumericProfile(Profile):
    """Scalar solution of (L_Δ + ½)ψ = G on [0, ξ_max], extended oddly to ξ < 0.

    Values and slopes come from a C² quintic Hermite interpolant; higher derivatives
    follow from ψ^(k+2) = G^(k) - ½ξψ^(k+1) - (k+3)/2 ψ^(k).
    """

    size = 1

    def __init__(
        self, grid: np.ndarray, values: np.ndarray, slopes: np.ndarray, rhs: PolyGaussian
    ) -> None:
        self.grid = grid
        self.rhs = rhs
        curvature = rhs(grid)[0] - 0.5 * grid * slopes - 1.5 * values
        self._interpolant = BPoly.from_derivatives(
            grid, np.stack([values, slopes, curvature], axis=1)
        )

    def derivatives(self, xi: np.ndarray, order: int) -> np.ndarray:
        z = np.abs(xi)
        inside = z <= self.grid[-1]
        zc = np.clip(z, 0.0, self.grid[-1])
        forcing = self.rhs.derivatives(zc, max(order - 2, 0))[:, 0]
        jets = np.zeros((max(order, 1) + 1, len(xi)))
        jets[0] = self._interpolant(zc)
        jets[1] = self._interpolant(zc, 1)
        for k in range(order - 1):
            jets[k + 2] = forcing[k] - 0.5 * zc * jets[k + 1] - 0.5 * (k + 3) * jets[k]
        jets = jets[: order + 1] * inside
        parity = np.where(xi < 0, -1.0, 1.0)
        signs = np.array([parity ** (k + 1) for k in range(order + 1)])
        return (signs * jets)[:, None, :]


class LinearCombination(Profile):
    """Σ C ξ^j ∂^k ψ_src plus a polynomial-Gaussian part."""

    def __init__(
        self,
        terms: Sequence[tuple[np.ndarray, int, Profile, int]],
        poly: PolyGaussian,
    ) -> None:
        self.terms = [(np.atleast_2d(c), j, src, k) for c, j, src, k in terms]
        self.poly = poly
        self.size = poly.size

    def derivatives(self, xi: np.ndarray, order: int) -> np.ndarray:
        out = self.poly.derivatives(xi, order)
        for matrix, power, source, k in self.terms:
            if matrix.size == 0:
                continue
            jets = source.derivatives(xi, k + order)
            for r in range(order + 1):
                total = np.zeros_like(jets[0])
                for i in range(min(r, power) + 1):
                    monomial = factorial(power) // factorial(power - i) * xi ** (power - i)
                    total += comb(r, i) * monomial * jets[k + r - i]
                out[r] += matrix @ total
        return out


class _Blocks:
    """Coefficient lookup that returns empty blocks for absent components."""

    def __init__(self, nf: NormalForm) -> None:
        self.nf = nf
        self.sizes = {
            "1": 1,
            "2": 1 if nf.case == CASE_INDEPENDENT else 0,
            "h": len(nf.blocks.get("h", [])),
        }

    def b(self, name: str) -> np.ndarray:
        i, j = name[0], name[1]
        if self.sizes[i] == 0 or self.sizes[j] == 0:
            return np.zeros((self.sizes[i], self.sizes[j]))
        return self.nf.b(name)

    def s(self, name: str) -> np.ndarray:
        return -self.b(f"{name}_10")

    def inverse_hh(self) -> np.ndarray:
        if self.sizes["h"] == 0:
            return np.zeros((0, 0))
        return np.linalg.inv(self.nf.b("hh_00"))


@dataclass
class SelfSimilarProfiles(Report):
    """Profiles of the diffusive tail in the variables (τ, ξ)."""

    case: str
    xi_max: float
    h_xi: float
    beta0: float
    D_eff: float
    eta_star: float
    delay: float
    grid: np.ndarray
    profiles: dict[str, Profile]
    checks: dict[str, float] = field(default_factory=dict)
    envelopes: dict[str, float] = field(default_factory=dict)

    export_exclude: ClassVar[tuple[str, ...]] = ("grid", "profiles")

    def modes(self) -> list[tuple[str, float, str]]:
        """(block, power of t + T, profile name) for each term of the ansatz."""
        modes = [("1", 0.5, "psi_I_0"), ("1", 0.0, "psi_I_1")]
        if self.case == CASE_INDEPENDENT:
            modes += [("2", 0.0, "psi_II_0"), ("2", -0.5, "psi_II_1"), ("2", -1.0, "psi_II_2")]
        modes += [("h", -0.5, "psi_h_0"), ("h", -1.0, "psi_h_1")]
        return modes

    def to_csv(self, path: str | Path) -> Path:
        """Write every profile on the ξ grid."""
        path = Path(path)
        columns = [self.grid]
        names = ["xi"]
        for name, profile in self.profiles.items():
            values = profile(self.grid)
            for j in range(profile.size):
                columns.append(values[j])
                names.append(name if profile.size == 1 else f"{name}_{j + 1}")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(
                path,
                np.column_stack(columns),
                delimiter=",",
                header=",".join(names),
                comments="",
            )
        except OSError as err:
            raise OutputError(f"Could not write {path}: {err}") from err
        return path


def _resolvent_solve(rhs: PolyGaussian, xi_max: float, h: float) -> NumericProfile:
    """Solve ψ'' + ½ξψ' + (3/2)ψ = G with ψ(0) = ψ(ξ_max) = 0."""
    for length in (xi_max, 1.5 * xi_max):
        m = int(round(length / h)) + 1
        grid = np.linspace(0.0, length, m)
        D1, D2 = fourth_order_matrices(m, grid[1] - grid[0])
        operator = (D2 + sparse.diags(0.5 * grid) @ D1 + 1.5 * sparse.identity(m)).tocsr()
        matrix = operator[1:-1][:, 1:-1].tocsc()
        forcing = rhs(grid)[0]
        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            try:
                interior = spsolve(matrix, forcing[1:-1])
            except (MatrixRankWarning, RuntimeError) as err:
                _LOGGER.warning("Tail BVP singular on [0, %.3g]: %s", length, err)
                continue
        if not np.all(np.isfinite(interior)):
            continue
        values = np.zeros(m)
        values[1:-1] = interior
        return NumericProfile(grid, values, D1 @ values, rhs)
    raise ConvergenceError(f"Tail BVP singular for ξ_max = {xi_max:g} and {1.5 * xi_max:g}")


def _colinear(t: _Blocks, psi0: PolyGaussian, D: float, delay: float, xi_max: float, h: float):
    K = D**-0.5
    d0 = psi0.derivative()
    inv = t.inverse_hh()
    leading = (
        (psi0 - d0.times_xi()).transform(-0.5 * t.b("h1_10"))
        + d0.derivative().transform(-t.b("h1_02") / D)
        + psi0.transform(-1.5 * t.s("h1"))
    )
    psi_h_0 = leading.transform(inv)
    rhs = d0.transform([[delay * K]]) - psi_h_0.derivative().transform(K * t.b("1h_01"))
    psi_1 = _resolvent_solve(rhs, xi_max, h)
    psi_h_1 = LinearCombination(
        [
            (inv @ (0.5 * t.b("h1_10")), 1, psi_1, 1),
            (inv @ (-t.b("h1_02") / D), 0, psi_1, 2),
            (inv @ (-1.5 * t.s("h1")), 0, psi_1, 0),
        ],
        (
            psi_h_0.derivative().transform(-K * t.b("hh_01"))
            + d0.transform(delay * K * t.s("h1"))
        ).transform(inv),
    )
    return {
        "psi_I_0": psi0,
        "psi_I_1": psi_1,
        "psi_h_0": psi_h_0,
        "psi_h_1": psi_h_1,
    }, rhs


def _independent(t: _Blocks, psi0: PolyGaussian, D: float, delay: float, xi_max: float, h: float):
    K = D**-0.5
    d0 = psi0.derivative()
    dd0 = d0.derivative()
    inv = t.inverse_hh()
    psi_II_0 = d0.transform([[K]])
    dII0 = psi_II_0.derivative()

    def slaved(row: str) -> PolyGaussian:
        """Leading-order right-hand side (−b^10 ∂τ' − b^02 ∂²/D − (3/2) s)ψ0 − b^01 ∂ψII0/√D."""
        return (
            (psi0 - d0.times_xi()).transform(-0.5 * t.b(f"{row}1_10"))
            + dd0.transform(-t.b(f"{row}1_02") / D)
            + psi0.transform(-1.5 * t.s(f"{row}1"))
            + dII0.transform(-K * t.b(f"{row}2_01"))
        )

    psi_h_0 = slaved("h").transform(inv)
    drift = slaved("2")
    correction = (
        d0.transform([[-delay * K]])
        + psi_II_0.transform(1.5 * t.s("12"))
        + dII0.times_xi().transform(-0.5 * t.b("12_10"))
        + dII0.derivative().transform(t.b("12_02") / D)
        + psi_h_0.derivative().transform(K * t.b("1h_01"))
    )
    rhs = drift.derivative().transform(-K * t.b("12_01")) - correction
    psi_1 = _resolvent_solve(rhs, xi_max, h)
    psi_II_1 = LinearCombination([(np.array([[K]]), 0, psi_1, 1)], drift)

    def second_order(row: str) -> LinearCombination:
        terms = [
            (0.5 * t.b(f"{row}1_10"), 1, psi_1, 1),
            (-t.b(f"{row}1_02") / D, 0, psi_1, 2),
            (-1.5 * t.s(f"{row}1"), 0, psi_1, 0),
            (-K * t.b(f"{row}2_01"), 0, psi_II_1, 1),
        ]
        poly = (
            d0.transform(delay * K * t.s(f"{row}1"))
            + dII0.times_xi().transform(0.5 * t.b(f"{row}2_10"))
            + dII0.derivative().transform(-t.b(f"{row}2_02") / D)
            + psi_II_0.transform(-1.5 * t.s(f"{row}2"))
            + psi_h_0.derivative().transform(-K * t.b(f"{row}h_01"))
        )
        return LinearCombination(terms, poly)

    psi_II_2 = second_order("2")
    raw_h_1 = second_order("h")
    psi_h_1 = LinearCombination(
        [(inv @ c, j, src, k) for c, j, src, k in raw_h_1.terms], raw_h_1.poly.transform(inv)
    )
    return {
        "psi_I_0": psi0,
        "psi_I_1": psi_1,
        "psi_II_0": psi_II_0,
        "psi_II_1": psi_II_1,
        "psi_II_2": psi_II_2,
        "psi_h_0": psi_h_0,
        "psi_h_1": psi_h_1,
    }, rhs


def solve_profiles(
    nf: NormalForm,
    xi_max: float = XI_MAX,
    h_xi: float = XI_STEP,
    beta0: float | None = None,
    *,
    symbol_only: bool = False,
) -> SelfSimilarProfiles:
    """Build the self-similar profiles of the diffusive tail.

    Args:
        nf: Normal form of the marginal pencil
        xi_max: Right end of the ξ interval (at least 10)
        h_xi: Grid spacing in ξ
        beta0: Amplitude of ψ^I_0; √D_eff by default
        symbol_only: Drop the logarithmic-delay forcing, for systems without a front

    Raises:
        ValueError: ξ_max below 10
        ConvergenceError: The resolvent BVP is singular
    """
    if xi_max < 10.0:
        raise ValueError(f"xi_max must be at least 10, got {xi_max}")
    D = nf.D_eff
    beta0 = np.sqrt(D) if beta0 is None else float(beta0)
    if symbol_only or nf.eta_star <= 0:
        _LOGGER.warning("No front rate available; the logarithmic-delay forcing is dropped")
        delay = 0.0
    else:
        delay = 1.5 / nf.eta_star
    blocks = _Blocks(nf)
    psi0 = PolyGaussian([[0.0], [beta0]])
    builder = _colinear if nf.case == CASE_COLINEAR else _independent
    profiles, rhs = builder(blocks, psi0, D, delay, xi_max, h_xi)

    grid = np.arange(0.0, xi_max + h_xi / 2, h_xi)
    jets = psi0.derivatives(grid, 2)[:, 0]
    psi1 = profiles["psi_I_1"]
    psi1_jets = psi1.derivatives(grid, 2)[:, 0]
    checks = {
        "psi_I_0_equation": float(np.max(np.abs(jets[2] + 0.5 * grid * jets[1] + jets[0]))),
        "psi_I_1_equation": float(
            np.max(
                np.abs(
                    psi1_jets[2] + 0.5 * grid * psi1_jets[1] + 1.5 * psi1_jets[0]
                    - rhs(grid)[0]
                )
            )
        ),
        "dirichlet": float(
            max(np.max(np.abs(p(np.zeros(1)))) if p.size else 0.0 for p in profiles.values())
        ),
    }
    envelopes = {
        name: float(np.max(np.abs(p(grid)) * np.exp(grid**2 / 8.0))) if p.size else 0.0
        for name, p in profiles.items()
    }
    _LOGGER.info(
        "Self-similar profiles (%s): envelope of psi_I_1 %.3g",
        nf.case,
        envelopes["psi_I_1"],
    )
    return SelfSimilarProfiles(
        case=nf.case,
        xi_max=xi_max,
        h_xi=h_xi,
        beta0=beta0,
        D_eff=D,
        eta_star=nf.eta_star,
        delay=delay,
        grid=grid,
        profiles=profiles,
        checks=checks,
        envelopes=envelopes,
    )


def odd_sector_spectrum(
    xi_max: float = XI_MAX, h_xi: float = XI_STEP, count: int = 6
) -> np.ndarray:
    """Eigenvalues of L_Δ = ∂² + ½ξ∂ + 1 with Dirichlet conditions on [0, ξ_max], nearest 0."""
    m = int(round(xi_max / h_xi)) + 1
    grid = np.linspace(0.0, xi_max, m)
    D1, D2 = fourth_order_matrices(m, grid[1] - grid[0])
    operator = (D2 + sparse.diags(0.5 * grid) @ D1 + sparse.identity(m)).tocsr()
    matrix = operator[1:-1][:, 1:-1].tocsc()
    values = eigs(matrix, k=count, sigma=0.1, which="LM", return_eigenvectors=False)
    return np.sort(values.real)[::-1]


# Second transcription of the correction terms, evaluated at explicit τ

def _ansatz(profile: Profile, rate: float, xi: np.ndarray, tau: float, order: int):
    """Jets and ∂τ-jets of e^{rate τ} ψ(ξ)."""
    jets = np.exp(rate * tau) * profile.derivatives(xi, order)
    return jets, rate * jets


def _xi_times(jets: np.ndarray, xi: np.ndarray) -> np.ndarray:
    out = xi * jets
    for k in range(1, len(jets)):
        out[k] += k * jets[k - 1]
    return out


def _tau_prime(field_: tuple[np.ndarray, np.ndarray], xi: np.ndarray) -> np.ndarray:
    """Jets of (∂τ - ½ξ∂ξ) applied to a field."""
    jets, dtau = field_
    return dtau[:-1] - 0.5 * _xi_times(jets[1:], xi)


def _apply(matrix: np.ndarray, jets: np.ndarray) -> np.ndarray:
    return np.einsum("ab,kbn->kan", np.atleast_2d(matrix), jets)


def _sum(*terms: np.ndarray) -> np.ndarray:
    depth = min(len(term) for term in terms)
    return sum(term[:depth] for term in terms)


def transcription_gap(
    profiles: SelfSimilarProfiles,
    nf: NormalForm,
    samples: int = 5,
    seed: int = 0,
) -> float:
    """Largest gap between the τ-free right-hand sides and the τ-dependent correction terms.

    The correction terms are re-evaluated from their definitions at random (ξ, τ),
    with explicit powers of e^{τ/2}, and compared to the assembled profiles.
    """
    rng = np.random.default_rng(seed)
    xi = rng.uniform(0.1, 6.0, samples)
    t = _Blocks(nf)
    D, delay = profiles.D_eff, profiles.delay
    K = D**-0.5
    p = profiles.profiles
    bhh = nf.b("hh_00") if t.sizes["h"] else np.zeros((0, 0))
    gaps = []
    for tau in rng.uniform(1.0, 8.0, 3):
        E = np.exp(tau / 2)
        order = 5
        psi_I = _ansatz(p["psi_I_0"], 0.5, xi, tau, order)
        psi_1 = _ansatz(p["psi_I_1"], 0.0, xi, tau, order)
        psi_h = _ansatz(p["psi_h_0"], -0.5, xi, tau, order)

        def base(row: str, field_I, field_II=None) -> np.ndarray:
            jets = _sum(
                _apply(-t.b(f"{row}1_10"), _tau_prime(field_I, xi)),
                _apply(-t.b(f"{row}1_02") / D, field_I[0][2:]),
                _apply(-1.5 * t.s(f"{row}1"), field_I[0]),
            )
            if field_II is not None:
                jets = _sum(jets, _apply(-E * K * t.b(f"{row}2_01"), field_II[0][1:]))
            return jets

        comparisons: list[tuple[np.ndarray, np.ndarray]] = []
        if profiles.case == CASE_COLINEAR:
            G_h_0 = base("h", psi_I)[0] / E
            tf_I_1 = _sum(
                _apply(E * K * t.b("1h_01"), psi_h[0][1:]),
                -delay / E * K * psi_I[0][1:],
            )
            tf_h_1 = _sum(
                _apply(-E * K * t.b("hh_01"), psi_h[0][1:]),
                _apply(delay / E * K * t.s("h1"), psi_I[0][1:]),
            )
            G_h_1 = _sum(base("h", psi_1), tf_h_1)[0]
            comparisons += [
                (G_h_0, bhh @ p["psi_h_0"](xi)),
                (-tf_I_1[0], p["psi_I_1"].rhs(xi)),
                (G_h_1, bhh @ p["psi_h_1"](xi)),
            ]
        else:
            psi_II = _ansatz(p["psi_II_0"], 0.0, xi, tau, order)
            psi_II_1 = _ansatz(p["psi_II_1"], -0.5, xi, tau, order)
            tf_II_1 = base("2", psi_I, psi_II)
            G_h_0 = base("h", psi_I, psi_II)[0] / E

            def first_order(row: str, sign: float) -> np.ndarray:
                return _sum(
                    _apply(sign * delay / E * K * t.s(f"{row}1"), psi_I[0][1:]),
                    _apply(-t.b(f"{row}2_10"), _tau_prime(psi_II, xi)),
                    _apply(-t.b(f"{row}2_02") / D, psi_II[0][2:]),
                    _apply(-1.5 * t.s(f"{row}2"), psi_II[0]),
                    _apply(-E * K * t.b(f"{row}h_01"), psi_h[0][1:]),
                )

            tf_I_1 = _sum(
                -delay / E * K * psi_I[0][1:],
                _apply(1.5 * t.s("12"), psi_II[0]),
                _apply(t.b("12_10"), _tau_prime(psi_II, xi)),
                _apply(t.b("12_02") / D, psi_II[0][2:]),
                _apply(E * K * t.b("1h_01"), psi_h[0][1:]),
            )
            G_I_1 = _sum(_apply(-K / E * t.b("12_01"), tf_II_1[1:]), -tf_I_1)[0]
            G_II_1 = _sum(K * psi_1[0][1:], tf_II_1 / E)[0]
            G_II_2 = _sum(base("2", psi_1, psi_II_1), first_order("2", 1.0))[0]
            G_h_1 = _sum(first_order("h", 1.0), base("h", psi_1, psi_II_1))[0]
            comparisons += [
                (G_h_0, bhh @ p["psi_h_0"](xi)),
                (G_I_1, p["psi_I_1"].rhs(xi)),
                (G_II_1, p["psi_II_1"](xi)),
                (G_II_2, p["psi_II_2"](xi)),
                (G_h_1, bhh @ p["psi_h_1"](xi)),
            ]
        for generic, assembled in comparisons:
            if generic.size:
                scale = max(1.0, float(np.max(np.abs(assembled))))
                gaps.append(float(np.max(np.abs(generic - assembled))) / scale)
    gap = max(gaps) if gaps else 0.0
    _LOGGER.debug("Transcription gap %.3g", gap)
    return gap


def equation_residual(
    spec: SystemSpec,
    c_star: float,
    weight: WeightSpec,
    delay: float,
    T: float,
    y: np.ndarray,
    t: float,
    fields: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
) -> np.ndarray:
    """F_res[v] for the weighted equation in the logarithmically delayed frame.

    F_res = v_t - D(v'' - 2ηv' + (η² - η')v) - ((c_* - δ/(t+T))I + B)(v' - ηv) - ω f(ω⁻¹ v)
    with η = ω'/ω and δ the delay coefficient; ``fields`` is (v, v_y, v_yy, v_t).
    """
    v, vy, vyy, vt = fields
    eta = weight.rate(y)
    deta = weight.rate_derivative(y)
    transport = (c_star - delay / (t + T)) * np.eye(spec.n) + spec.advection
    diffusion = spec.D @ (vyy - 2 * eta * vy + (eta**2 - deta) * v)
    drift = transport @ (vy - eta * v)
    log_w = weight.log_omega(y)
    safe = log_w < _LOG_OMEGA_CAP
    reaction = spec.linearization @ v
    if np.any(safe):
        scale = np.exp(log_w[safe])
        reaction[:, safe] = spec.f(v[:, safe] / scale) * scale
    return vt - diffusion - drift - reaction


@dataclass
class ApproxSolution(Report):
    """v^app(y, t) = χ v⁻(y) + (1 - χ) v⁺(y, t), glued on [(t+T)^μ, (t+T)^μ + 1]."""

    case: str
    T: float
    mu: float
    y0: float
    beta0: float
    D_eff: float
    c_star: float
    eta_star: float
    delay: float
    front: FrontProfile | None = None
    profiles: SelfSimilarProfiles | None = None
    Q: np.ndarray | None = None
    rows: dict[str, list[int]] = field(default_factory=dict)

    export_exclude: ClassVar[tuple[str, ...]] = ("front", "profiles", "Q", "rows")

    @property
    def weight(self) -> WeightSpec:
        """Exponential weight of the front."""
        return WeightSpec(self.eta_star)

    @property
    def r(self) -> float:
        """Algebraic weight exponent 2 + μ."""
        return 2.0 + self.mu

    def cutoff(self, y: np.ndarray, t: float) -> tuple[np.ndarray, ...]:
        """χ with its y-, yy- and t-derivatives."""
        s = t + self.T
        value, d1, d2 = smoothstep(y - s**self.mu)
        return 1.0 - value, -d1, -d2, d1 * self.mu * s ** (self.mu - 1)

    def inner(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """v⁻ = ω q_* with its first two y-derivatives."""
        w = self.weight
        omega = w.omega(y)
        eta = w.rate(y)
        deta = w.rate_derivative(y)
        q, dq, ddq = (self.front.evaluate(y, nu) for nu in range(3))
        return (
            omega * q,
            omega * (dq + eta * q),
            omega * (ddq + 2 * eta * dq + (eta**2 + deta) * q),
        )

    def outer(self, y: np.ndarray, t: float) -> tuple[np.ndarray, ...]:
        """v⁺ = Q Φ⁺ with its y-, yy- and t-derivatives."""
        s = t + self.T
        root = np.sqrt(self.D_eff * s)
        xi = (y + self.y0) / root
        n = self.Q.shape[0]
        phi = np.zeros((4, n, len(y)))
        for label, power, name in self.profiles.modes():
            profile = self.profiles.profiles[name]
            rows = self.rows.get(label, [])
            if not rows or profile.size == 0:
                continue
            jets = profile.derivatives(xi, 2)
            phi[0, rows] += s**power * jets[0]
            phi[1, rows] += s**power * jets[1] / root
            phi[2, rows] += s**power * jets[2] / root**2
            phi[3, rows] += s ** (power - 1) * (power * jets[0] - 0.5 * xi * jets[1])
        return tuple(self.Q @ phi[k] for k in range(4))

    def evaluate(self, y: np.ndarray, t: float) -> tuple[np.ndarray, ...]:
        """(v, v_y, v_yy, v_t) at the points y, each of shape (n, len(y))."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        n = self.Q.shape[0]
        chi, chi_y, chi_yy, chi_t = self.cutoff(y, t)
        minus = [np.zeros((n, len(y))) for _ in range(3)]
        plus = [np.zeros((n, len(y))) for _ in range(4)]
        use_inner = chi > 0
        use_outer = chi < 1
        if np.any(use_inner):
            for k, part in enumerate(self.inner(y[use_inner])):
                minus[k][:, use_inner] = part
        if np.any(use_outer):
            for k, part in enumerate(self.outer(y[use_outer], t)):
                plus[k][:, use_outer] = part
        gap = minus[0] - plus[0]
        value = chi * minus[0] + (1 - chi) * plus[0]
        dy = chi_y * gap + chi * minus[1] + (1 - chi) * plus[1]
        dyy = (
            chi_yy * gap
            + 2 * chi_y * (minus[1] - plus[1])
            + chi * minus[2]
            + (1 - chi) * plus[2]
        )
        dt = chi_t * gap + (1 - chi) * plus[3]
        return value, dy, dyy, dt

    def __call__(self, y: np.ndarray, t: float) -> np.ndarray:
        """v^app(y, t)."""
        return self.evaluate(y, t)[0]

    def residual(self, y: np.ndarray, t: float) -> np.ndarray:
        """F_res[v^app](y, t), shape (n, len(y))."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return equation_residual(
            self.front.spec,
            self.c_star,
            self.weight,
            self.delay,
            self.T,
            y,
            t,
            self.evaluate(y, t),
        )

    def matching_gap(self, t: float) -> tuple[float, float]:
        """|v⁻ - v⁺| and |∂_y v⁻ - ∂_y v⁺| at y = (t+T)^μ."""
        y = np.array([(t + self.T) ** self.mu])
        inner = self.inner(y)
        outer = self.outer(y, t)
        return (
            float(np.max(np.abs(inner[0] - outer[0]))),
            float(np.max(np.abs(inner[1] - outer[1]))),
        )

    def y_grid(self, t: float, dy: float = 0.05) -> np.ndarray:
        """Grid from the left end of the front to the edge of the Gaussian tail."""
        s = t + self.T
        right = -self.y0 + self.profiles.xi_max * np.sqrt(self.D_eff * s)
        return np.arange(self.front.grid[0], right + dy / 2, dy)


def assemble_vapp(
    front: FrontProfile,
    profiles: SelfSimilarProfiles,
    nf: NormalForm,
    T: float = DEFAULT_T,
    mu: float = DEFAULT_MU,
) -> ApproxSolution:
    """Glue the front to the diffusive tail.

    Raises:
        SystemDefinitionError: μ outside (0, 1/8), case mismatch, or T below the
            matching floor
    """
    if not 0 < mu < 0.125:
        raise SystemDefinitionError(f"mu must lie in (0, 1/8), got {mu}")
    if profiles.case != nf.case:
        raise SystemDefinitionError("profiles and normal form disagree on the case")
    y0 = 1.0 + front.a if nf.case == CASE_COLINEAR else front.a
    rows = {"1": [0], "h": list(nf.blocks.get("h", []))}
    if nf.case == CASE_INDEPENDENT:
        rows["2"] = [1]
    vapp = ApproxSolution(
        case=nf.case,
        T=float(T),
        mu=float(mu),
        y0=float(y0),
        beta0=profiles.beta0,
        D_eff=profiles.D_eff,
        c_star=front.c_star,
        eta_star=front.eta_star,
        delay=profiles.delay,
        front=front,
        profiles=profiles,
        Q=nf.Q,
        rows=rows,
    )
    if T**mu + y0 <= 0:
        raise SystemDefinitionError(
            f"T = {T:g} is below T_min: the gluing point {T**mu:.3g} lies left of -y0 = {-y0:.3g}"
        )
    gap, _ = vapp.matching_gap(0.0)
    if gap > MATCHING_FLOOR:
        raise SystemDefinitionError(
            f"T = {T:g} is below T_min: matching error {gap:.3g} exceeds {MATCHING_FLOOR}"
        )
    _LOGGER.info("Approximate solution: y0=%.6g T=%g mu=%g matching gap %.3g", y0, T, mu, gap)
    return vapp


@dataclass
class ResidualReport(Report):
    """Weighted sup-norms of F_res[v^app] over time with the fitted decay exponent."""

    times: list[float]
    sup_norms: list[float]
    exponent: float
    monotone: bool
    matching: list[float]
    matching_derivative: list[float]
    matching_exponent: float
    T: float
    mu: float
    y0: float
    beta0: float
    case: str

    def to_csv(self, path: str | Path) -> Path:
        """Write (t, weighted_sup, fitted_exponent) rows."""
        path = Path(path)
        rows = np.column_stack(
            [self.times, self.sup_norms, np.full(len(self.times), self.exponent)]
        )
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(
                path, rows, delimiter=",", header="t,weighted_sup,fitted_exponent", comments=""
            )
        except OSError as err:
            raise OutputError(f"Could not write {path}: {err}") from err
        return path


def residual(
    vapp: ApproxSolution,
    t_samples: Sequence[float] | None = None,
    dy: float = 0.05,
) -> ResidualReport:
    """Measure ‖ρ_{0,r} F_res[v^app](·, t)‖_∞ and fit its decay in t + T.

    Args:
        vapp: Approximate solution
        t_samples: Times; {0, T, 3T, 7T, 15T} by default
        dy: Spacing of the y grid
    """
    T = vapp.T
    times = list(t_samples) if t_samples is not None else [0.0, T, 3 * T, 7 * T, 15 * T]
    algebraic = WeightSpec(vapp.eta_star, r_minus=0.0, r_plus=vapp.r)
    norms, gaps, slopes = [], [], []
    for t in times:
        y = vapp.y_grid(t, dy)
        values = vapp.residual(y, t)
        norms.append(float(np.max(algebraic.rho(y) * np.max(np.abs(values), axis=0))))
        gap, slope = vapp.matching_gap(t)
        gaps.append(gap)
        slopes.append(slope)
        _LOGGER.debug("Residual at t=%g: %.3g", t, norms[-1])
    shifted = np.asarray(times) + T
    exponent = loglog_slope(shifted, np.asarray(norms))
    matching_exponent = loglog_slope(shifted, np.asarray(gaps))
    monotone = bool(np.all(np.diff(norms) <= 0))
    if not monotone:
        _LOGGER.warning("Weighted residual is not monotone in t; T may be too small")
    _LOGGER.info("Residual decay exponent %.4f (mu=%g)", exponent, vapp.mu)
    return ResidualReport(
        times=[float(t) for t in times],
        sup_norms=norms,
        exponent=float(exponent),
        monotone=monotone,
        matching=gaps,
        matching_derivative=slopes,
        matching_exponent=float(matching_exponent),
        T=T,
        mu=vapp.mu,
        y0=vapp.y0,
        beta0=vapp.beta0,
        case=vapp.case,
    )


def summarize(report: ResidualReport) -> dict[str, Any]:
    """Short record of the decay fit for the pipeline scoreboard."""
    target = -(0.5 - 4 * report.mu)
    return {
        "exponent": report.exponent,
        "target": target,
        "within": report.exponent <= target + 0.1,
        "monotone": report.monotone,
    }
