"""Integer constraint language: terms over ``+ - *`` and six relations.

Terms and constraints are frozen dataclasses so they hash, compare and can
be shared freely.  The module also holds the tiny tokenizer and
precedence-climbing parser reused by the program frontend.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Optional, Union

from .linear import EQ, GE, LinearConstraint, LinearExpression


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col


# -- terms ----------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*'
    left: "Term"
    right: "Term"

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Neg:
    arg: "Term"

    def __str__(self) -> str:
        return f"-{self.arg}"


Term = Union[Var, Const, BinOp, Neg]

RELATIONS = ("<", "<=", ">", ">=", "=", "!=")
_NEGATED = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}
_FLIPPED = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}


@dataclass(frozen=True)
class Rel:
    op: str
    left: Term
    right: Term

    def __post_init__(self) -> None:
        if self.op not in RELATIONS:
            raise ValueError(f"unknown relation {self.op!r}")

    def __str__(self) -> str:
        return f"{_show(self.left)} {self.op} {_show(self.right)}"


Constraint = Rel


def _show(t: Term) -> str:
    s = str(t)
    return s[1:-1] if isinstance(t, BinOp) else s


def as_term(x: Union[Term, int, str]) -> Term:
    if isinstance(x, (Var, Const, BinOp, Neg)):
        return x
    if isinstance(x, int):
        return Const(x)
    if isinstance(x, str):
        return Var(x)
    raise TypeError(f"cannot make a term from {x!r}")


def add(a, b) -> Term:
    return BinOp("+", as_term(a), as_term(b))


def sub(a, b) -> Term:
    return BinOp("-", as_term(a), as_term(b))


def mul(a, b) -> Term:
    return BinOp("*", as_term(a), as_term(b))


def rel(op: str, a, b) -> Rel:
    return Rel(op, as_term(a), as_term(b))


# -- evaluation and syntax queries -----------------------------------------

def eval_term(t: Term, v: Mapping[str, int]) -> int:
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        if t.name not in v:
            raise KeyError(f"unbound variable {t.name!r}")
        return v[t.name]
    if isinstance(t, Neg):
        return -eval_term(t.arg, v)
    a, b = eval_term(t.left, v), eval_term(t.right, v)
    if t.op == "+":
        return a + b
    if t.op == "-":
        return a - b
    return a * b


def compare(op: str, a, b) -> bool:
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "=":
        return a == b
    return a != b


def eval_constraint(c: Rel, v: Mapping[str, int]) -> bool:
    return compare(c.op, eval_term(c.left, v), eval_term(c.right, v))


def term_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Const):
        return set()
    if isinstance(t, Neg):
        return term_vars(t.arg)
    return term_vars(t.left) | term_vars(t.right)


def vars_of(c: Rel) -> tuple[str, ...]:
    return tuple(sorted(term_vars(c.left) | term_vars(c.right)))


def negate(c: Rel) -> Rel:
    return Rel(_NEGATED[c.op], c.left, c.right)


def flip(c: Rel) -> Rel:
    """Same relation with sides swapped (``a < b`` becomes ``b > a``)."""
    return Rel(_FLIPPED[c.op], c.right, c.left)


def map_vars(t: Term, f: Callable[[str], Term]) -> Term:
    if isinstance(t, Var):
        return f(t.name)
    if isinstance(t, Const):
        return t
    if isinstance(t, Neg):
        return Neg(map_vars(t.arg, f))
    return BinOp(t.op, map_vars(t.left, f), map_vars(t.right, f))


def rename(c: Union[Rel, Term], mapping: Mapping[str, str]) -> Union[Rel, Term]:
    """Rename variables; every variable must be mapped."""
    def f(name: str) -> Term:
        if name not in mapping:
            raise KeyError(f"unmapped variable {name!r}")
        return Var(mapping[name])
    if isinstance(c, Rel):
        return Rel(c.op, map_vars(c.left, f), map_vars(c.right, f))
    return map_vars(c, f)


def sexpr(x: Union[Rel, Term]) -> str:
    """Debug S-expression dump, e.g. ``(= z (* x y))``."""
    if isinstance(x, Rel):
        return f"({x.op} {sexpr(x.left)} {sexpr(x.right)})"
    if isinstance(x, Var):
        return x.name
    if isinstance(x, Const):
        return str(x.value)
    if isinstance(x, Neg):
        return f"(- {sexpr(x.arg)})"
    return f"({x.op} {sexpr(x.left)} {sexpr(x.right)})"


# -- polynomial normal form -------------------------------------------------

Monomial = tuple[str, ...]  # sorted variable names with repetition
Poly = dict[Monomial, int]


def polynomial(t: Term) -> Poly:
    if isinstance(t, Const):
        return {(): t.value} if t.value else {}
    if isinstance(t, Var):
        return {(t.name,): 1}
    if isinstance(t, Neg):
        return {m: -c for m, c in polynomial(t.arg).items()}
    a, b = polynomial(t.left), polynomial(t.right)
    out: Poly = dict(a)
    if t.op in "+-":
        s = 1 if t.op == "+" else -1
        for m, c in b.items():
            out[m] = out.get(m, 0) + s * c
    else:
        out = {}
        for ma, ca in a.items():
            for mb, cb in b.items():
                m = tuple(sorted(ma + mb))
                out[m] = out.get(m, 0) + ca * cb
    return {m: c for m, c in out.items() if c}


def difference(c: Rel) -> Poly:
    """Polynomial ``left - right``."""
    return polynomial(BinOp("-", c.left, c.right))


def is_linear_poly(p: Poly) -> bool:
    return all(len(m) <= 1 for m in p)


def poly_to_linear(p: Poly) -> LinearExpression:
    return LinearExpression.build({m[0]: c for m, c in p.items() if m}, p.get((), 0))


def linear_form(c: Rel) -> Optional[LinearConstraint]:
    """Exact linear constraint for linear ``c`` over the integers.

    Strict relations become non-strict by shifting one unit; ``!=`` and
    nonlinear constraints give ``None``.
    """
    p = difference(c)
    if not is_linear_poly(p) or c.op == "!=":
        return None
    e = poly_to_linear(p)
    return linear_from_expr(e, c.op)


def linear_from_expr(e: LinearExpression, op: str) -> LinearConstraint:
    """Integer rewriting of ``e op 0`` into ``>= 0`` / ``= 0`` form."""
    # scale to integers first so that the unit shift is exact
    e = e.integer_scaled() if e.terms else e
    if op == ">=":
        return LinearConstraint.make(e, GE)
    if op == ">":
        return LinearConstraint.make(e - 1, GE)
    if op == "<=":
        return LinearConstraint.make(-e, GE)
    if op == "<":
        return LinearConstraint.make(-e - 1, GE)
    if op == "=":
        return LinearConstraint.make(e, EQ)
    raise ValueError(f"no linear form for {op!r}")


# -- tokenizer and parser -----------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9#']*)
  | (?P<op><=|>=|==|!=|&&|\|\||[-+*<>=(){}\[\]:;,!])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            out.append(Token(kind, tok, line, pos - line_start + 1))
        for k, ch in enumerate(tok):
            if ch == "\n":
                line += 1
                line_start = pos + k + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.peek().text == text and self.peek().kind != "eof":
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text or t.kind == "eof":
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        self.i += 1
        return t

    def expect_kind(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind}, found {t.text or 'end of input'!r}", t.line, t.col)
        self.i += 1
        return t

    def error(self, message: str) -> ParseError:
        t = self.peek()
        return ParseError(message, t.line, t.col)


def parse_term_from(ts: TokenStream) -> Term:
    return _parse_sum(ts)


def _parse_sum(ts: TokenStream) -> Term:
    t = _parse_product(ts)
    while ts.peek().text in ("+", "-") and ts.peek().kind == "op":
        op = ts.next().text
        t = BinOp(op, t, _parse_product(ts))
    return t


def _parse_product(ts: TokenStream) -> Term:
    t = _parse_unary(ts)
    while ts.peek().text == "*":
        ts.next()
        t = BinOp("*", t, _parse_unary(ts))
    return t


def _parse_unary(ts: TokenStream) -> Term:
    if ts.accept("-"):
        arg = _parse_unary(ts)
        if isinstance(arg, Const):
            return Const(-arg.value)
        return Neg(arg)
    if ts.accept("+"):
        return _parse_unary(ts)
    tok = ts.peek()
    if tok.kind == "num":
        ts.next()
        return Const(int(tok.text))
    if tok.kind == "name":
        ts.next()
        return Var(tok.text)
    if ts.accept("("):
        t = _parse_sum(ts)
        ts.expect(")")
        return t
    raise ts.error(f"expected a term, found {tok.text or 'end of input'!r}")


def parse_rel_from(ts: TokenStream) -> Rel:
    left = _parse_sum(ts)
    tok = ts.peek()
    op = {"==": "=", "<>": "!="}.get(tok.text, tok.text)
    if op not in RELATIONS:
        raise ts.error(f"expected a relation, found {tok.text or 'end of input'!r}")
    ts.next()
    right = _parse_sum(ts)
    return Rel(op, left, right)


def parse_term(text: str) -> Term:
    ts = TokenStream(tokenize(text))
    t = parse_term_from(ts)
    ts.expect_kind("eof")
    return t


def parse_constraint(text: str) -> Rel:
    """Parse e.g. ``"z = x * y"`` or ``"x + 1 <= 2*y"``."""
    ts = TokenStream(tokenize(text))
    c = parse_rel_from(ts)
    ts.expect_kind("eof")
    return c


def iter_subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, BinOp):
        yield from iter_subterms(t.left)
        yield from iter_subterms(t.right)
    elif isinstance(t, Neg):
        yield from iter_subterms(t.arg)
