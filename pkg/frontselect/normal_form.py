"""Matrix pencil checks and the diffusive normal form of the marginal symbol."""

from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import logging
from typing import Any, ClassVar

import numpy as np
from scipy import linalg
from scipy.stats import ortho_group

from .base import Report
from .const import (
    CASE_COLINEAR,
    CASE_INDEPENDENT,
    COLINEAR_TOL,
    CONDITION_LIMIT,
    JORDAN_CHAIN_TOL,
    KERNEL_GAP,
    STRUCTURE_TOL,
)
from .dispersion import SpreadingSpeedResult, SymbolPencil
from .exceptions import ConvergenceError, HypothesisError
from .systems import SystemSpec

_LOGGER = logging.getLogger(__name__)

# Interpolation stencil in (λ, ν) for the coefficients of B = S A Q
_LAMBDA_NODES = np.array([-1.0, 0.0, 1.0])
_NU_NODES = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])


@dataclass
class PencilData(Report):
    """Expansion A(λ, ν) = A0 + A10 λ + A01 ν + A02 ν² with its Jordan chain."""

    A0: np.ndarray
    A10: np.ndarray
    A01: np.ndarray
    A02: np.ndarray
    u0: np.ndarray
    u1: np.ndarray
    e_ad: np.ndarray
    case: str
    c_star: float = 0.0
    eta_star: float = 0.0
    sign_product: float = 0.0

    @property
    def n(self) -> int:
        """Number of components."""
        return self.A0.shape[0]

    def symbol(self, lam: complex, nu: complex) -> np.ndarray:
        """Evaluate A(λ, ν)."""
        return self.A0 + self.A10 * lam + self.A01 * nu + self.A02 * nu**2


def pencil_from_coefficients(
    A0: np.ndarray,
    A01: np.ndarray,
    A02: np.ndarray,
    A10: np.ndarray | None = None,
    c_star: float = 0.0,
    eta_star: float = 0.0,
) -> PencilData:
    """Compute the kernel, Jordan chain and case of a marginal pencil.

    Raises:
        HypothesisError: The kernel is not one-dimensional, the Jordan chain is
            missing or the sign condition fails
    """
    A0, A01, A02 = (np.asarray(a, dtype=float) for a in (A0, A01, A02))
    n = A0.shape[0]
    A10 = -np.eye(n) if A10 is None else np.asarray(A10, dtype=float)
    scale = max(1.0, np.linalg.norm(A0, 2))

    U, sigma, Vh = linalg.svd(A0)
    if sigma[-1] > 1e-8 * scale:
        raise HypothesisError(
            "3.1", "A0 is not singular at the double root", {"sigma_min": sigma[-1]}
        )
    if n > 1 and sigma[-2] <= KERNEL_GAP * scale:
        raise HypothesisError(
            "3.1", "the kernel of A0 is not one-dimensional", {"singular_values": sigma}
        )
    u0 = Vh[-1].copy()
    if u0[np.argmax(np.abs(u0))] < 0:
        u0 = -u0
    e_ad = U[:, -1].copy()
    overlap = float(u0 @ e_ad)
    if abs(overlap) < 1e-12:
        raise HypothesisError("3.1", "the kernel and cokernel vectors are orthogonal")
    if overlap < 0:
        e_ad = -e_ad

    rhs = -A01 @ u0
    u1, *_ = linalg.lstsq(A0, rhs)
    chain_residual = float(np.linalg.norm(A0 @ u1 - rhs))
    if chain_residual > JORDAN_CHAIN_TOL * scale:
        raise HypothesisError(
            "3.1", "A0 u1 = -A01 u0 has no solution", {"residual": chain_residual}
        )
    if np.linalg.norm(u1) <= COLINEAR_TOL * np.linalg.norm(u0):
        case = CASE_COLINEAR
        u1 = u0.copy()
    else:
        case = CASE_INDEPENDENT

    sign_product = float(-(u0 @ e_ad) * ((A02 @ u0 + A01 @ u1) @ e_ad))
    if sign_product >= 0:
        raise HypothesisError(
            "3.1", "sign condition violated", {"product": sign_product}
        )
    _LOGGER.debug("Pencil case %s, u0=%s, u1=%s", case, u0, u1)
    return PencilData(
        A0=A0,
        A10=A10,
        A01=A01,
        A02=A02,
        u0=u0,
        u1=u1,
        e_ad=e_ad,
        case=case,
        c_star=c_star,
        eta_star=eta_star,
        sign_product=sign_product,
    )


def extract_pencil(spec: SystemSpec, speed: SpreadingSpeedResult) -> PencilData:
    """Build the shifted symbol at (c_*, η_*) and check its pencil structure."""
    pencil = SymbolPencil.from_spec(spec.centered(), speed.c_star, eta=speed.eta_star)
    A0, A10, A01, A02 = pencil.coefficients()
    return pencil_from_coefficients(A0, A01, A02, A10, speed.c_star, speed.eta_star)


@dataclass
class NormalForm(Report):
    """Transformation B = S A Q with the block coefficient tables."""

    case: str
    S: np.ndarray
    Q: np.ndarray
    blocks: dict[str, list[int]]
    coefficients: dict[str, np.ndarray]
    D_eff: float
    c_star: float = 0.0
    eta_star: float = 0.0
    extraction_residual: float = 0.0
    condition: float = 0.0
    structure: dict[str, float] = field(default_factory=dict)

    export_exclude: ClassVar[tuple[str, ...]] = ("coefficients",)

    def b(self, name: str) -> np.ndarray:
        """Block coefficient by name, e.g. ``b("21_02")`` for b21^02."""
        i, j = name[0], name[1]
        return self.coefficients[name[3:]][np.ix_(self.blocks[i], self.blocks[j])]

    def s(self, name: str) -> np.ndarray:
        """Block of SQ, e.g. ``s("21")``."""
        return -self.b(f"{name}_10")

    def transform(self, lam: complex, nu: complex) -> np.ndarray:
        """Evaluate B(λ, ν)."""
        return sum(
            self.coefficients[key] * lam**j * nu**k
            for key, (j, k) in _POWERS.items()
        )

    @property
    def has_h_block(self) -> bool:
        """Whether the remaining h-block is non-empty."""
        return "h" in self.blocks and len(self.blocks["h"]) > 0

    def to_dict(self) -> dict[str, Any]:
        """Export with the b-table keyed by coefficient names."""
        data = super().to_dict()
        names = [b + "_" + p for b in _block_pairs(self.blocks) for p in _POWERS]
        data["b_table"] = {
            f"b{name}": self.b(name).tolist()
            for name in names
            if name[0] in self.blocks and name[1] in self.blocks
        }
        return data


_POWERS = {"00": (0, 0), "10": (1, 0), "01": (0, 1), "02": (0, 2)}


def _block_pairs(blocks: dict[str, list[int]]) -> list[str]:
    labels = [label for label in blocks if label != "h"]
    return [a + b for a, b in itertools.product(labels, repeat=2)]


def _complement(vectors: np.ndarray, rng_matrix: np.ndarray | None) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the columns of vectors."""
    basis = linalg.null_space(vectors.T)
    if rng_matrix is not None and basis.shape[1] > 1:
        basis = basis @ rng_matrix[: basis.shape[1], : basis.shape[1]]
    return basis


def _transformation(
    p: PencilData, rotation: np.ndarray | None
) -> tuple[np.ndarray, np.ndarray, dict[str, list[int]]]:
    n = p.n
    c = 1.0 / float(p.u0 @ p.e_ad)
    if p.case == CASE_COLINEAR:
        Q = np.column_stack([p.u0, _complement(p.u0[:, None], rotation)])
        S = np.vstack([c * p.e_ad, _complement(p.e_ad[:, None], rotation).T])
        blocks = {"1": [0], "2": list(range(1, n))}
        return S, Q, blocks

    image = p.A0 @ p.u1
    s2 = image / float(image @ image)
    E = p.A0.T @ image
    columns = [p.u0, p.u1]
    rows = [c * p.e_ad, s2]
    if n > 2:
        columns.append(_complement(np.column_stack([p.u0, E]), rotation))
        rows.append(_complement(np.column_stack([p.e_ad, s2]), rotation).T)
    Q = np.column_stack(columns)
    S = np.vstack(rows)
    blocks = {"1": [0], "2": [1]}
    if n > 2:
        blocks["3"] = list(range(2, n))
    return S, Q, blocks


def _interpolate_coefficients(
    p: PencilData, S: np.ndarray, Q: np.ndarray
) -> tuple[dict[str, np.ndarray], float]:
    """Identify the polynomial coefficients of S A(λ, ν) Q on a tensor stencil."""
    values = np.array(
        [[S @ p.symbol(lam, nu) @ Q for nu in _NU_NODES] for lam in _LAMBDA_NODES]
    )
    inv_lam = np.linalg.inv(np.vander(_LAMBDA_NODES, increasing=True))
    inv_nu = np.linalg.inv(np.vander(_NU_NODES, increasing=True))
    table = np.einsum("ja,kb,abxy->jkxy", inv_lam, inv_nu, values)
    coefficients = {key: table[j, k] for key, (j, k) in _POWERS.items()}
    mask = np.ones(table.shape[:2], dtype=bool)
    for j, k in _POWERS.values():
        mask[j, k] = False
    residual = float(np.max(np.abs(table[mask])))
    return coefficients, residual


def _structure_checks(nf: NormalForm, scale: float) -> dict[str, float]:
    """Deviation of every entry the normal form prescribes."""
    C = nf.coefficients
    checks: dict[str, float] = {
        "b11_00": abs(C["00"][0, 0]),
        "b11_01": abs(C["01"][0, 0]),
        "b11_10": abs(C["10"][0, 0] + 1.0),
        "row1_B0": float(np.max(np.abs(C["00"][0]))),
        "column1_B0": float(np.max(np.abs(C["00"][:, 0]))),
    }
    if nf.case == CASE_COLINEAR:
        checks["column1_B01"] = float(np.max(np.abs(C["01"][:, 0])))
    else:
        target = np.zeros(C["00"].shape[0])
        target[1] = 1.0
        checks["B0_e1"] = float(np.max(np.abs(C["00"][:, 1] - target)))
        checks["B01_e0"] = float(np.max(np.abs(C["01"][:, 0] + target)))
        checks["row2_B0"] = float(np.max(np.abs(C["00"][1, 2:]))) if C["00"].shape[0] > 2 else 0.0
    return {key: value / scale for key, value in checks.items()}


def build_normal_form(p: PencilData, seed: int = 0) -> NormalForm:
    """Construct S and Q so that B = S A Q reveals the scalar diffusive block.

    Args:
        p: Pencil data with a simple marginal double root
        seed: Seed of the one-time re-randomization of the completion bases

    Returns:
        The normal form with coefficient tables and D_eff

    Raises:
        ConvergenceError: S or Q stays ill-conditioned after re-randomization,
            or the prescribed structure does not hold to tolerance
        HypothesisError: The effective diffusivity is not positive or the
            remaining block is singular
    """
    rotation = None
    for attempt in range(2):
        S, Q, blocks = _transformation(p, rotation)
        condition = max(np.linalg.cond(S), np.linalg.cond(Q))
        if condition <= CONDITION_LIMIT:
            break
        _LOGGER.warning(
            "Normal form transformation ill-conditioned (%.3g), attempt %d", condition, attempt
        )
        rotation = ortho_group.rvs(max(p.n, 2), random_state=seed)
    else:
        raise ConvergenceError(f"S, Q condition number {condition:.3g} exceeds {CONDITION_LIMIT:g}")

    coefficients, residual = _interpolate_coefficients(p, S, Q)
    # The last block is the remaining h-block; it is absent for n = 2 independent
    if p.case == CASE_COLINEAR:
        blocks["h"] = blocks["2"]
    elif "3" in blocks:
        blocks["h"] = blocks["3"]

    b11_02 = float(coefficients["02"][0, 0])
    if p.case == CASE_COLINEAR:
        D_eff = b11_02
    else:
        D_eff = b11_02 + float(coefficients["01"][0, 1])
    nf = NormalForm(
        case=p.case,
        S=S,
        Q=Q,
        blocks=blocks,
        coefficients=coefficients,
        D_eff=D_eff,
        c_star=p.c_star,
        eta_star=p.eta_star,
        extraction_residual=residual,
        condition=float(condition),
    )
    scale = max(1.0, *(float(np.max(np.abs(A))) for A in (p.A0, p.A01, p.A02)))
    nf.structure = _structure_checks(nf, scale)
    worst = max(nf.structure.values())
    if worst > STRUCTURE_TOL or residual > STRUCTURE_TOL * scale:
        raise ConvergenceError(
            f"Normal form structure violated by {worst:.3g} (extraction residual {residual:.3g})"
        )
    if D_eff <= 0:
        raise HypothesisError("3.1", "effective diffusivity is not positive", {"D_eff": D_eff})
    if nf.has_h_block:
        block = nf.b("hh_00")
        if np.linalg.cond(block) > CONDITION_LIMIT:
            raise HypothesisError(
                "3.1", "the remaining block of B0 is not invertible", {"block": block}
            )
    _LOGGER.info("Normal form: case=%s D_eff=%.12g", p.case, D_eff)
    return nf


def dispersion_curvature(p: PencilData, radius: float = 0.05, points: int = 21) -> float:
    """Half the second derivative at ν = 0 of the critical eigenvalue branch λ(ν).

    λ(ν) is the eigenvalue of A0 + A01 ν + A02 ν² nearest to zero.
    """
    nus = np.linspace(-radius, radius, points)
    branch = []
    for nu in nus:
        values = np.linalg.eigvals(p.A0 + p.A01 * nu + p.A02 * nu**2)
        branch.append(values[np.argmin(np.abs(values))].real)
    coeffs = np.polynomial.polynomial.polyfit(nus, branch, 6)
    return float(coeffs[2])
