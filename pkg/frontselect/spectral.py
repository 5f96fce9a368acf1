"""Point spectrum and zero-mode checks for the weighted linearization about a front."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import logging
from pathlib import Path
from typing import Any, ClassVar

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import (
    ArpackNoConvergence,
    LinearOperator,
    eigs,
    splu,
    svds,
)

from .base import Report
from .const import (
    BOUNDARY_TOL,
    LOCALIZATION_THRESHOLD,
    POINT_SPECTRUM_TOL,
    RITZ_RESIDUAL_TOL,
    SCAN_DEPTH,
    SCAN_EIGENVALUES,
    ZERO_MODE_FLOOR,
)
from .exceptions import ConvergenceError, OutputError
from .front import FrontProfile
from .weights import WeightSpec

_LOGGER = logging.getLogger(__name__)

CLOSURE_DIRICHLET = "dirichlet"
CLOSURE_BOUNDED = "bounded"

_SHIFT_IMAG = (-1.0, 0.0, 1.0)
_ESSENTIAL_SAMPLES = 201


@dataclass(eq=False)
class WeightedOperator:
    """Second-order discretization of L g = ω A(ω⁻¹ g) on the front grid.

    Unknowns are stacked node-major, g[i * n + j] = g_j(x_i).
    """

    matrix: sparse.csr_matrix
    grid: np.ndarray
    n: int
    h: float
    closure: str
    weight: WeightSpec
    limits: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def size(self) -> int:
        """Number of unknowns."""
        return self.matrix.shape[0]

    @property
    def norm(self) -> float:
        """Spectral norm of the matrix."""
        return float(svds(self.matrix, k=1, return_singular_vectors=False)[0])

    def with_rank_one(
        self, amplitude: float = 1.5, center: float = 0.0, width: float = 1.0
    ) -> WeightedOperator:
        """Return L + amplitude <., g> g with a normalized Gaussian g in every component.

        The Gaussian is truncated at five widths so the perturbation stays sparse.
        """
        profile = np.exp(-(((self.grid - center) / width) ** 2) / 2.0)
        profile[np.abs(self.grid - center) > 5.0 * width] = 0.0
        profile /= np.sqrt(self.h * np.sum(profile**2))
        g = sparse.csr_matrix(profile[:, None])
        block = amplitude * self.h * sparse.kron(g @ g.T, sparse.identity(self.n))
        return replace(self, matrix=(self.matrix + block).tocsr())

    def with_zero_block(self) -> WeightedOperator:
        """Return the operator with an appended decoupled zero block."""
        zero = sparse.csr_matrix((self.n, self.n))
        matrix = sparse.bmat([[self.matrix, None], [None, zero]], format="csr")
        return replace(self, matrix=matrix)


def _coefficients(front: FrontProfile, weight: WeightSpec, x: np.ndarray):
    """First- and zeroth-order coefficient blocks of the conjugated operator."""
    n = front.n
    D, C = front.D, front.transport
    eta = weight.rate(x)
    deta = weight.rate_derivative(x)
    jac = front.spec.jacobian(front.evaluate(x))
    first = C[None] - 2.0 * eta[:, None, None] * D[None]
    zeroth = (
        np.moveaxis(jac, -1, 0)
        + (eta**2 - deta)[:, None, None] * D[None]
        - eta[:, None, None] * C[None]
    )
    return first, zeroth


def build_weighted_operator(
    front: FrontProfile,
    weight: WeightSpec | None = None,
    *,
    closure: str = CLOSURE_DIRICHLET,
) -> WeightedOperator:
    """Assemble L_h = D D2 + (cI + B - 2Dη) D1 + f'(q) + D(η² - η') - (cI + B)η.

    The conjugation by ω is done analytically through η = ω'/ω. D1 and D2 are
    second-order centered differences even though the front itself is fourth
    order; the zero-mode floor in check_zero_mode scales with h² to match.

    Args:
        front: Critical front
        weight: Exponential weight; e^{η_* x} blended to 1 by default
        closure: ``dirichlet`` at both ends, or ``bounded`` with a Neumann
            condition at the right end that admits non-decaying solutions

    Raises:
        ConvergenceError: The front has not reached its limits inside the domain
    """
    if front.boundary_mismatch > BOUNDARY_TOL:
        raise ConvergenceError(
            "Domain too short for the weighted operator: the front core is "
            f"{front.boundary_mismatch:.3g} at the edges"
        )
    weight = weight or WeightSpec(front.eta_star)
    h = front.h
    n = front.n
    if closure == CLOSURE_DIRICHLET:
        x = front.grid[1:-1]
    else:
        x = front.grid[1:]
    m = len(x)
    first_coeff, zeroth_coeff = _coefficients(front, weight, x)

    ones = np.ones(m)
    d1 = sparse.diags([-ones[1:], ones[1:]], [-1, 1]) / (2.0 * h)
    d2 = sparse.diags([ones[1:], -2.0 * ones, ones[1:]], [-1, 0, 1]) / h**2
    if closure == CLOSURE_BOUNDED:
        # Ghost node mirrored about the last node: g'(x_R) = 0
        d1 = d1.tolil()
        d2 = d2.tolil()
        d1[m - 1, m - 2] = 0.0
        d2[m - 1, m - 2] = 2.0 / h**2
    eye = sparse.identity(n)
    matrix = (
        sparse.kron(d2, sparse.csr_matrix(front.D))
        + sparse.block_diag(list(first_coeff)) @ sparse.kron(d1, eye)
        + sparse.block_diag(list(zeroth_coeff))
    ).tocsr()
    limits = {
        "plus": _limit_blocks(front, front.eta_star, np.zeros(n)),
        "minus": _limit_blocks(front, 0.0, front.u_minus),
    }
    return WeightedOperator(
        matrix=matrix, grid=x, n=n, h=h, closure=closure, weight=weight, limits=limits
    )


def _limit_blocks(front: FrontProfile, eta: float, state: np.ndarray) -> np.ndarray:
    """Constant coefficients (D, C - 2Dη, J + Dη² - Cη) at one end of the line."""
    D, C = front.D, front.transport
    J = front.spec.jacobian(state)
    return np.stack([D, C - 2.0 * eta * D, J + eta**2 * D - eta * C])


def limit_symbol(blocks: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Eigenvalues of the constant-coefficient limit at wavenumbers k, shape (len(k), n)."""
    k = np.asarray(k, dtype=float)[:, None, None]
    matrices = -(k**2) * blocks[0] + 1j * k * blocks[1] + blocks[2]
    return np.linalg.eigvals(matrices)


@dataclass
class Eigenpair(Report):
    """A Ritz pair with its localization diagnostics."""

    value: complex
    residual: float
    localization: float
    point: bool
    vector: np.ndarray | None = None

    export_exclude: ClassVar[tuple[str, ...]] = ("vector",)


@dataclass
class SpectrumReport(Report):
    """Result of the point-spectrum scan and the zero-mode check."""

    eigenvalues: list[Eigenpair]
    essential: dict[str, np.ndarray]
    essential_top: dict[str, float]
    passed: bool
    depth: float
    threshold: float
    shifts: list[complex]
    failed_shifts: list[complex] = field(default_factory=list)
    zero_mode: ZeroModeVerdict | None = None

    export_exclude: ClassVar[tuple[str, ...]] = ("essential",)

    @property
    def point_spectrum(self) -> list[Eigenpair]:
        """Eigenvalues classified as point spectrum."""
        return [pair for pair in self.eigenvalues if pair.point]

    def to_csv(self, path: str | Path) -> Path:
        """Write the eigenvalues with residuals and classification."""
        path = Path(path)
        rows = [
            (p.value.real, p.value.imag, p.residual, p.localization, int(p.point))
            for p in self.eigenvalues
        ]
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(
                path,
                np.array(rows).reshape(-1, 5),
                delimiter=",",
                header="re,im,residual,localization,point",
                comments="",
            )
        except OSError as err:
            raise OutputError(f"Could not write {path}: {err}") from err
        return path


def _localization(op: WeightedOperator, vector: np.ndarray) -> float:
    """Fraction of the l2 mass in the middle half of the domain."""
    density = np.sum(np.abs(vector.reshape(-1, op.n)) ** 2, axis=1)
    if len(density) < len(op.grid):
        density = density[: len(op.grid)]
    x = op.grid
    quarter = (x[-1] - x[0]) / 4.0
    middle = (x >= x[0] + quarter) & (x <= x[-1] - quarter)
    return float(np.sum(density[middle]) / np.sum(density))


def _shift_invert(
    matrix: sparse.csr_matrix, shift: complex, k: int
) -> tuple[complex, np.ndarray, np.ndarray]:
    try:
        values, vectors = eigs(matrix, k=k, sigma=shift, which="LM", tol=1e-12)
    except ArpackNoConvergence:
        perturbed = shift + 1e-3 * (1 + 1j)
        _LOGGER.debug("Shift %s did not converge; retrying at %s", shift, perturbed)
        values, vectors = eigs(matrix, k=k, sigma=perturbed, which="LM", tol=1e-12)
    return shift, values, vectors


def _gershgorin_bound(matrix: sparse.spmatrix) -> float:
    """Upper bound on the real parts of the eigenvalues."""
    diagonal = matrix.diagonal()
    radii = np.asarray(abs(matrix).sum(axis=1)).ravel() - np.abs(diagonal)
    return float(np.max(diagonal.real + radii))


def scan_point_spectrum(
    op: WeightedOperator,
    depth: float = SCAN_DEPTH,
    *,
    count: int = SCAN_EIGENVALUES,
    threshold: float = LOCALIZATION_THRESHOLD,
    workers: int | None = None,
) -> SpectrumReport:
    """Compute the rightmost eigenvalues of L_h and classify them.

    Shift-invert solves run concurrently at shifts on Re λ = 0 and Re λ = -depth/2,
    and on the positive real axis up to the Gershgorin bound.
    An eigenvalue counts as point spectrum when more than ``threshold`` of its
    eigenvector's mass lies in the middle half of the domain.

    Args:
        op: Weighted operator
        depth: Scan depth δ₀ into the left half-plane
        count: Number of eigenvalues kept
        threshold: Localization threshold
        workers: Thread pool size

    Returns:
        The report; it passes iff no point eigenvalue has Re λ ≥ 1e-4
    """
    matrix = op.matrix.astype(complex).tocsc()
    k = min(count, op.size - 2)
    shifts = [complex(re, im) for re in (0.0, -depth / 2.0) for im in _SHIFT_IMAG]
    bound = _gershgorin_bound(matrix)
    if bound > POINT_SPECTRUM_TOL:
        shifts += [complex(re, 0.0) for re in np.linspace(0.0, bound, 4)[1:]]

    found: list[tuple[complex, np.ndarray]] = []
    failed: list[complex] = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_shift_invert, matrix, s, k) for s in shifts]
        for shift, future in zip(shifts, futures, strict=True):
            try:
                _, values, vectors = future.result()
            except (ArpackNoConvergence, RuntimeError) as err:
                _LOGGER.warning("Eigen-solver failed at shift %s: %s", shift, err)
                failed.append(shift)
                continue
            found.extend(zip(values, vectors.T, strict=True))
    if len(failed) == len(shifts):
        raise ConvergenceError("Eigen-solver failed at every shift")

    pairs: list[Eigenpair] = []
    for value, vector in sorted(found, key=lambda item: -item[0].real):
        if value.real < -depth:
            continue
        if any(abs(value - p.value) < 1e-8 * max(1.0, abs(value)) for p in pairs):
            continue
        residual = float(
            np.linalg.norm(matrix @ vector - value * vector) / np.linalg.norm(vector)
        )
        if residual >= RITZ_RESIDUAL_TOL:
            _LOGGER.debug("Dropping λ=%s with Ritz residual %.3g", value, residual)
            continue
        localization = _localization(op, vector)
        pairs.append(
            Eigenpair(
                value=complex(value),
                residual=residual,
                localization=localization,
                point=localization > threshold,
                vector=vector,
            )
        )
        if len(pairs) == count:
            break

    k_max = 10.0 / np.sqrt(op.h)
    wavenumbers = np.linspace(-k_max, k_max, _ESSENTIAL_SAMPLES)
    essential = {key: limit_symbol(blocks, wavenumbers) for key, blocks in op.limits.items()}
    essential_top = {key: float(np.max(vals.real)) for key, vals in essential.items()}

    unstable = [p for p in pairs if p.point and p.value.real >= POINT_SPECTRUM_TOL]
    passed = not unstable
    _LOGGER.info(
        "Point spectrum scan: %d eigenvalues, %d localized, verdict %s",
        len(pairs),
        sum(p.point for p in pairs),
        "pass" if passed else "fail",
    )
    return SpectrumReport(
        eigenvalues=pairs,
        essential=essential,
        essential_top=essential_top,
        passed=passed,
        depth=depth,
        threshold=threshold,
        shifts=shifts,
        failed_shifts=failed,
    )


@dataclass
class ZeroModeVerdict(Report):
    """Smallest singular value of L_h under the bounded closure."""

    sigma_min: float
    floor: float
    passed: bool
    norm: float


def check_zero_mode(op: WeightedOperator, constant: float = ZERO_MODE_FLOOR) -> ZeroModeVerdict:
    """Check that L_h has no (near-)bounded kernel.

    The floor is constant * h² * ‖L_h‖ / N² with N the number of grid nodes.
    """
    matrix = op.matrix.tocsc()
    norm = op.norm
    nodes = op.size // op.n
    floor = constant * op.h**2 * norm / nodes**2
    try:
        lu = splu(matrix)
    except RuntimeError as err:
        _LOGGER.info("Bounded-closure operator is exactly singular: %s", err)
        return ZeroModeVerdict(sigma_min=0.0, floor=floor, passed=False, norm=norm)
    inverse = LinearOperator(
        matrix.shape,
        matvec=lu.solve,
        rmatvec=lambda v: lu.solve(v, trans="T"),
        dtype=float,
    )
    largest = svds(inverse, k=1, return_singular_vectors=False)[0]
    sigma_min = float(1.0 / largest)
    passed = sigma_min > floor
    _LOGGER.info("Zero-mode check: sigma_min=%.3g floor=%.3g", sigma_min, floor)
    return ZeroModeVerdict(sigma_min=sigma_min, floor=floor, passed=passed, norm=norm)


def conjugation_defect(op: WeightedOperator, front: FrontProfile, test: Any) -> float:
    """Max-norm gap between L_h v and the conjugated operator applied to exact derivatives.

    ``test(x, nu)`` returns the nu-th derivative of v, shape (n, len(x)).
    """
    x = op.grid[: op.size // op.n]
    first, zeroth = _coefficients(front, op.weight, x)
    v, dv, ddv = (test(x, nu) for nu in range(3))
    exact = (
        front.D @ ddv
        + np.einsum("mij,jm->im", first, dv)
        + np.einsum("mij,jm->im", zeroth, v)
    )
    discrete = (op.matrix @ v.T.ravel()).reshape(-1, op.n).T
    return float(np.max(np.abs(discrete - exact)))
