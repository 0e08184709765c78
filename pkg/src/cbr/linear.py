"""Exact rational arithmetic, linear expressions and linear constraints.

Rationals are :class:`fractions.Fraction` values (canonical, arbitrary
precision).  Everything polyhedral in the package is built on the two
immutable types defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

Number = Union[int, Fraction]

GE = ">="
EQ = "="


def rat(value: Union[Number, str], den: int = 1) -> Fraction:
    """Build a canonical rational; ``rat(-4, -6) == Fraction(2, 3)``."""
    if den == 0:
        raise ZeroDivisionError("rational with zero denominator")
    return Fraction(value) / den


def rat_arith(a: Number, b: Number, op: str):
    """Dispatch exact arithmetic by name; ``cmp`` returns -1, 0 or 1."""
    a, b = Fraction(a), Fraction(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b == 0:
            raise ZeroDivisionError("rational division by zero")
        return a / b
    if op == "cmp":
        return (a > b) - (a < b)
    raise ValueError(f"unknown rational operation {op!r}")


def floor_ceil(a: Number) -> tuple[int, int]:
    a = Fraction(a)
    return math.floor(a), math.ceil(a)


def format_rational(a: Number) -> str:
    a = Fraction(a)
    if a.denominator == 1:
        return str(a.numerator)
    return f"{a.numerator}/{a.denominator}"


@dataclass(frozen=True)
class LinearExpression:
    """``sum(coef * var) + constant`` with no zero coefficients.

    ``terms`` is kept sorted by variable name so equal expressions are
    structurally equal and hash alike.
    """

    terms: tuple[tuple[str, Fraction], ...] = ()
    constant: Fraction = Fraction(0)

    @staticmethod
    def build(coeffs: Mapping[str, Number] | Iterable[tuple[str, Number]] = (),
              constant: Number = 0) -> "LinearExpression":
        acc: dict[str, Fraction] = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for var, c in items:
            acc[var] = acc.get(var, Fraction(0)) + Fraction(c)
        terms = tuple(sorted((v, c) for v, c in acc.items() if c != 0))
        return LinearExpression(terms, Fraction(constant))

    @staticmethod
    def var(name: str, coef: Number = 1) -> "LinearExpression":
        return LinearExpression.build({name: coef})

    @staticmethod
    def const(value: Number) -> "LinearExpression":
        return LinearExpression((), Fraction(value))

    @property
    def coeffs(self) -> dict[str, Fraction]:
        return dict(self.terms)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.terms)

    def coeff(self, var: str) -> Fraction:
        for v, c in self.terms:
            if v == var:
                return c
        return Fraction(0)

    def is_constant(self) -> bool:
        return not self.terms

    def linear_part(self) -> "LinearExpression":
        return LinearExpression(self.terms, Fraction(0))

    def __add__(self, other: "LinearExpression | Number") -> "LinearExpression":
        if not isinstance(other, LinearExpression):
            return LinearExpression(self.terms, self.constant + Fraction(other))
        return LinearExpression.build(self.terms + other.terms, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self) -> "LinearExpression":
        return LinearExpression(tuple((v, -c) for v, c in self.terms), -self.constant)

    def __sub__(self, other: "LinearExpression | Number") -> "LinearExpression":
        if not isinstance(other, LinearExpression):
            return self + (-Fraction(other))
        return self + (-other)

    def __rsub__(self, other: Number) -> "LinearExpression":
        return (-self) + other

    def __mul__(self, k: Number) -> "LinearExpression":
        k = Fraction(k)
        if k == 0:
            return LinearExpression()
        return LinearExpression(tuple((v, c * k) for v, c in self.terms), self.constant * k)

    __rmul__ = __mul__

    def evaluate(self, valuation: Mapping[str, Number]) -> Fraction:
        total = self.constant
        for v, c in self.terms:
            if v not in valuation:
                raise KeyError(f"unbound variable {v!r}")
            total += c * Fraction(valuation[v])
        return total

    def substitute(self, var: str, replacement: "LinearExpression") -> "LinearExpression":
        c = self.coeff(var)
        if c == 0:
            return self
        rest = LinearExpression(tuple(t for t in self.terms if t[0] != var), self.constant)
        return rest + replacement * c

    def rename(self, mapping: Mapping[str, str]) -> "LinearExpression":
        return LinearExpression.build(((mapping.get(v, v), c) for v, c in self.terms), self.constant)

    def integer_scaled(self) -> "LinearExpression":
        """Positive multiple with coprime integer coefficients."""
        values = [c for _, c in self.terms] + [self.constant]
        lcm = 1
        for c in values:
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
        ints = [int(c * lcm) for c in values]
        g = math.gcd(*ints) if ints else 0
        if g == 0:
            return self
        return self * Fraction(lcm, g)

    def __str__(self) -> str:
        parts: list[str] = []
        if self.constant != 0 or not self.terms:
            parts.append(format_rational(self.constant))
        for v, c in self.terms:
            mag = abs(c)
            body = v if mag == 1 else f"{format_rational(mag)}*{v}"
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f"{'+' if c > 0 else '-'} {body}")
        return " ".join(parts)


@dataclass(frozen=True)
class LinearConstraint:
    """``expression >= 0`` or ``expression = 0`` in canonical form.

    Use :meth:`make` (or the ``ge``/``le``/``eq`` helpers) rather than the
    raw constructor; it scales to coprime integers and, for equalities,
    makes the leading coefficient positive.
    """

    expression: LinearExpression
    relation: str = GE

    @staticmethod
    def make(expression: LinearExpression, relation: str = GE) -> "LinearConstraint":
        if relation not in (GE, EQ):
            raise ValueError(f"relation must be '>=' or '=', got {relation!r}")
        e = expression.integer_scaled()
        if relation == EQ and e.terms and e.terms[0][1] < 0:
            e = -e
        if relation == EQ and not e.terms and e.constant < 0:
            e = -e
        return LinearConstraint(e, relation)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.expression.variables

    def is_trivial(self) -> bool:
        """True for variable-free constraints that always hold."""
        e = self.expression
        if e.terms:
            return False
        return e.constant == 0 if self.relation == EQ else e.constant >= 0

    def is_contradiction(self) -> bool:
        e = self.expression
        if e.terms:
            return False
        return e.constant != 0 if self.relation == EQ else e.constant < 0

    def satisfied_by(self, valuation: Mapping[str, Number]) -> bool:
        value = self.expression.evaluate(valuation)
        return value == 0 if self.relation == EQ else value >= 0

    def rename(self, mapping: Mapping[str, str]) -> "LinearConstraint":
        return LinearConstraint.make(self.expression.rename(mapping), self.relation)

    def substitute(self, var: str, replacement: LinearExpression) -> "LinearConstraint":
        return LinearConstraint.make(self.expression.substitute(var, replacement), self.relation)

    def as_inequalities(self) -> tuple["LinearConstraint", ...]:
        if self.relation == GE:
            return (self,)
        return (LinearConstraint.make(self.expression), LinearConstraint.make(-self.expression))

    def sort_key(self) -> tuple:
        return (self.relation != EQ, self.variables, str(self))

    def __str__(self) -> str:
        return f"{self.expression} {self.relation} 0"


def ge(lhs: LinearExpression | Number, rhs: LinearExpression | Number = 0) -> LinearConstraint:
    return LinearConstraint.make(_lin(lhs) - _lin(rhs), GE)


def le(lhs: LinearExpression | Number, rhs: LinearExpression | Number = 0) -> LinearConstraint:
    return LinearConstraint.make(_lin(rhs) - _lin(lhs), GE)


def eq(lhs: LinearExpression | Number, rhs: LinearExpression | Number = 0) -> LinearConstraint:
    return LinearConstraint.make(_lin(lhs) - _lin(rhs), EQ)


def _lin(x: LinearExpression | Number) -> LinearExpression:
    return x if isinstance(x, LinearExpression) else LinearExpression.const(x)


FALSE = LinearConstraint(LinearExpression.const(-1), GE)
