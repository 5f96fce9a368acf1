"""Tests for reaction expressions."""

from __future__ import annotations

import numpy as np
import pytest

from frontselect.exceptions import ExpressionParseError
from frontselect.expressions import ReactionTerm, parse_reaction


def test_parse_with_caret_power_and_params() -> None:
    expr = parse_reaction("a*u1^2 - u2", 2, {"a": 3.0})
    term = ReactionTerm([expr, parse_reaction("u1*u2", 2, {})], 2)
    values = term(np.array([[2.0], [5.0]]))
    assert values[:, 0] == pytest.approx([7.0, 10.0])


def test_exact_jacobian() -> None:
    term = ReactionTerm.from_strings(["u1 - u1^2 + u1*u2", "exp(u1) - u2"], 2, {})
    jac = term.jacobian(np.array([0.5, 2.0]))
    assert jac == pytest.approx(np.array([[1.0 - 1.0 + 2.0, 0.5], [np.exp(0.5), -1.0]]))


def test_unknown_identifier_reports_location() -> None:
    with pytest.raises(ExpressionParseError) as err:
        ReactionTerm.from_strings(["u1", "u1 + gamma*u2"], 2, {})
    assert err.value.line == 2
    assert err.value.column == 6


def test_syntax_error() -> None:
    with pytest.raises(ExpressionParseError):
        parse_reaction("u1 *", 1, {})


def test_wrong_component_count() -> None:
    with pytest.raises(ExpressionParseError):
        ReactionTerm.from_strings(["u1"], 2, {})


def test_shifted_term() -> None:
    term = ReactionTerm.from_strings(["u1*(1 - u1)"], 1, {}).shifted(np.array([1.0]))
    assert term(np.array([[0.0]]))[0, 0] == pytest.approx(0.0)
    assert term.jacobian(np.array([0.0]))[0, 0] == pytest.approx(-1.0)


def test_constant_component_broadcasts() -> None:
    term = ReactionTerm.from_strings(["0", "-u2"], 2, {})
    values = term(np.ones((2, 4)))
    assert values.shape == (2, 4)
    assert np.all(values[0] == 0.0)
