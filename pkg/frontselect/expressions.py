"""Symbolic reaction terms built from expression strings."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
import logging
import re
from tokenize import TokenError

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .exceptions import ExpressionParseError

_LOGGER = logging.getLogger(__name__)

_TRANSFORMATIONS = standard_transformations + (convert_xor,)
_FUNCTIONS = {"exp": sp.exp, "cos": sp.cos}
_IDENTIFIER = re.compile(r"(?<![0-9.])[A-Za-z_][A-Za-z_0-9]*")


def state_symbols(n: int) -> list[sp.Symbol]:
    """Return the state symbols u1..un."""
    return [sp.Symbol(f"u{i + 1}", real=True) for i in range(n)]


def _check_identifiers(source: str, allowed: set[str], line: int) -> None:
    """Reject identifiers that are neither state variables, parameters nor functions."""
    for match in _IDENTIFIER.finditer(source):
        name = match.group()
        if name not in allowed and name not in _FUNCTIONS:
            raise ExpressionParseError(
                f"Unknown identifier {name!r}", line, match.start() + 1
            )


def parse_reaction(
    source: str, n: int, params: Mapping[str, float], line: int = 1
) -> sp.Expr:
    """Parse one reaction component.

    Args:
        source: Expression over u1..un, parameter names, exp and cos; ``^`` is a power
        n: Number of components
        params: Parameter values substituted into the expression
        line: Line number reported on failure

    Returns:
        The parsed expression with parameters substituted

    Raises:
        ExpressionParseError: Syntax error or unknown identifier
    """
    symbols = state_symbols(n)
    local_dict: dict[str, object] = {str(s): s for s in symbols}
    local_dict.update(_FUNCTIONS)
    _check_identifiers(source, set(local_dict) | set(params), line)
    local_dict.update({name: sp.Float(value) for name, value in params.items()})
    try:
        expr = parse_expr(
            source,
            local_dict=local_dict,
            transformations=_TRANSFORMATIONS,
        )
    except SyntaxError as err:
        raise ExpressionParseError(
            f"Syntax error in {source!r}", line, err.offset or 1
        ) from err
    except (TokenError, TypeError, ValueError) as err:
        raise ExpressionParseError(f"Cannot parse {source!r}: {err}", line, 1) from err
    if not isinstance(expr, sp.Expr):
        raise ExpressionParseError(f"{source!r} is not an expression", line, 1)
    return sp.sympify(expr)


class ReactionTerm:
    """Vector field f: R^n -> R^n with its exact Jacobian."""

    def __init__(self, exprs: Sequence[sp.Expr], n: int) -> None:
        """Initialize from n sympy expressions over u1..un."""
        self.n = n
        self.symbols = state_symbols(n)
        self.exprs = [sp.sympify(e) for e in exprs]
        self.jacobian_exprs = sp.Matrix(self.exprs).jacobian(self.symbols)
        self._f = sp.lambdify(self.symbols, self.exprs, modules="numpy")
        self._jac = sp.lambdify(
            self.symbols, self.jacobian_exprs.tolist(), modules="numpy"
        )

    @classmethod
    def from_strings(
        cls, sources: Sequence[str], n: int, params: Mapping[str, float]
    ) -> ReactionTerm:
        """Parse n expression strings, reporting errors by their index as line."""
        if len(sources) != n:
            raise ExpressionParseError(
                f"Expected {n} reaction components, got {len(sources)}", len(sources), 1
            )
        exprs = [
            parse_reaction(source, n, params, line=index + 1)
            for index, source in enumerate(sources)
        ]
        return cls(exprs, n)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        """Evaluate f on states of shape (n, ...)."""
        u = np.asarray(u, dtype=float)
        values = self._f(*u)
        return np.stack(
            [np.broadcast_to(np.asarray(v, dtype=float), u.shape[1:]) for v in values]
        )

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        """Evaluate the Jacobian on states of shape (n, ...), returning (n, n, ...)."""
        u = np.asarray(u, dtype=float)
        rows = self._jac(*u)
        return np.stack(
            [
                np.stack(
                    [np.broadcast_to(np.asarray(v, dtype=float), u.shape[1:]) for v in row]
                )
                for row in rows
            ]
        )

    def shifted(self, offset: np.ndarray) -> ReactionTerm:
        """Return g(w) = f(w + offset)."""
        subs = {s: s + float(o) for s, o in zip(self.symbols, offset, strict=True)}
        return ReactionTerm([e.xreplace(subs) for e in self.exprs], self.n)

    def to_strings(self) -> list[str]:
        """Render the expressions back into parseable strings."""
        return [sp.sstr(e).replace("**", "^") for e in self.exprs]
