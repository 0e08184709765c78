from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cbr.linear import (EQ, GE, FALSE, LinearConstraint, LinearExpression, eq, floor_ceil,
                        format_rational, ge, le, rat, rat_arith)

fractions = st.fractions(max_denominator=50).filter(lambda f: abs(f) < 1000)


def test_rat_arith_examples():
    assert rat_arith(Fraction(1, 2), Fraction(1, 3), "add") == Fraction(5, 6)
    assert rat(-4, -6) == Fraction(2, 3)
    assert rat_arith(Fraction(179, 19), 9, "cmp") > 0
    assert rat_arith(3, 3, "cmp") == 0


def test_division_by_zero_is_reported():
    with pytest.raises(ZeroDivisionError):
        rat_arith(1, 0, "div")


@pytest.mark.parametrize("value, expected", [
    (Fraction(179, 19), (9, 10)), (Fraction(3), (3, 3)), (Fraction(-7, 2), (-4, -3))])
def test_floor_ceil(value, expected):
    assert floor_ceil(value) == expected


def test_format_rational():
    assert format_rational(Fraction(179, 19)) == "179/19"
    assert format_rational(Fraction(4, 2)) == "2"


@given(fractions, fractions, fractions)
def test_field_laws(a, b, c):
    assert rat_arith(rat_arith(a, b, "add"), c, "add") == rat_arith(a, rat_arith(b, c, "add"), "add")
    assert rat_arith(a, b, "mul") == rat_arith(b, a, "mul")
    assert a * (b + c) == a * b + a * c
    if a != 0:
        assert rat_arith(a, rat_arith(1, a, "div"), "mul") == 1


@given(fractions)
def test_floor_ceil_brackets(a):
    lo, hi = floor_ceil(a)
    assert lo <= a <= hi
    assert a - lo < 1 and hi - a < 1


def test_evaluate():
    x, y = LinearExpression.var("x"), LinearExpression.var("y")
    facet = x * 11 - y * 8 + 69
    assert facet.evaluate({"x": 10, "y": 1}) == 171
    assert LinearExpression.const(0).evaluate({}) == 0
    assert (x + y).evaluate({"x": Fraction(1, 2), "y": Fraction(1, 2)}) == 1
    with pytest.raises(KeyError):
        (x + y).evaluate({"x": 1})


def test_zero_coefficients_are_dropped():
    x = LinearExpression.var("x")
    assert (x - x).variables == ()
    assert LinearExpression.build({"x": 0, "y": 2}).variables == ("y",)


def test_constraint_canonical_form():
    x, y = LinearExpression.var("x"), LinearExpression.var("y")
    c = eq(x * Fraction(-1, 2), y)
    assert c.relation == EQ
    assert c.expression.coeff(c.expression.variables[0]) > 0
    assert all(f.denominator == 1 for f in c.expression.coeffs.values())
    assert str(le(x, 3)) == "3 - x >= 0"
    assert ge(x, y).relation == GE


def test_trivial_and_contradiction():
    assert LinearConstraint.make(LinearExpression.const(2)).is_trivial()
    assert FALSE.is_contradiction()
    assert eq(LinearExpression.const(1), 0).is_contradiction()


def test_as_inequalities_and_substitute():
    x, y = LinearExpression.var("x"), LinearExpression.var("y")
    c = eq(x, y + 1)
    a, b = c.as_inequalities()
    assert a.satisfied_by({"x": 3, "y": 2}) and b.satisfied_by({"x": 3, "y": 2})
    assert not a.satisfied_by({"x": 2, "y": 2}) or not b.satisfied_by({"x": 2, "y": 2})
    d = c.substitute("y", LinearExpression.const(4))
    assert d.satisfied_by({"x": 5})
    assert set(c.rename({"x": "z"}).variables) == {"y", "z"}
