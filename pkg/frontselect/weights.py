"""Exponential and algebraic weights used by the spectral and tail modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BPoly

# Blend of log ω / η: 0 with vanishing derivatives at -1, x at +1
_EXPONENT_BLEND = BPoly.from_derivatives([-1.0, 1.0], [[0.0, 0.0, 0.0], [1.0, 1.0, 0.0]])


@dataclass(frozen=True)
class WeightSpec:
    """Smooth weight ω = e^{η s(x)} and algebraic weight ρ_{r-, r+}."""

    eta: float
    r_minus: float = 0.0
    r_plus: float = 0.0
    _rho_blend: BPoly = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Build the quintic blend of log ρ on [-1, 1]."""
        blend = BPoly.from_derivatives(
            [-1.0, 1.0],
            [[0.0, -self.r_minus, -self.r_minus], [0.0, self.r_plus, -self.r_plus]],
        )
        object.__setattr__(self, "_rho_blend", blend)

    def exponent(self, x: np.ndarray, nu: int = 0) -> np.ndarray:
        """The function s with log ω = η s, or its derivative of order nu."""
        x = np.asarray(x, dtype=float)
        inner = _EXPONENT_BLEND(np.clip(x, -1.0, 1.0), nu)
        outer = {0: np.maximum(x, 0.0), 1: np.ones_like(x), 2: np.zeros_like(x)}[nu]
        right = x >= 1.0
        left = x <= -1.0
        result = np.where(right, outer, inner)
        return np.where(left, 0.0, result)

    def log_omega(self, x: np.ndarray) -> np.ndarray:
        """log ω(x)."""
        return self.eta * self.exponent(x)

    def omega(self, x: np.ndarray) -> np.ndarray:
        """ω(x)."""
        return np.exp(self.log_omega(x))

    def rate(self, x: np.ndarray) -> np.ndarray:
        """η(x) = ω'/ω."""
        return self.eta * self.exponent(x, 1)

    def rate_derivative(self, x: np.ndarray) -> np.ndarray:
        """η'(x)."""
        return self.eta * self.exponent(x, 2)

    def log_rho(self, x: np.ndarray) -> np.ndarray:
        """log ρ(x)."""
        x = np.asarray(x, dtype=float)
        magnitude = np.maximum(np.abs(x), 1.0)
        outer = np.where(x < 0, self.r_minus, self.r_plus) * np.log(magnitude)
        inner = self._rho_blend(np.clip(x, -1.0, 1.0))
        return np.where(np.abs(x) >= 1.0, outer, inner)

    def rho(self, x: np.ndarray) -> np.ndarray:
        """ρ(x)."""
        return np.exp(self.log_rho(x))
