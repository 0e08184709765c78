"""Parser and scope checker for the mini language.

Grammar::

    program := 'fn' NAME '(' [param (',' param)*] ')' block
    param   := NAME ':' 'int' 'in' '[' INT ',' INT ']'
    block   := '{' stmt* '}'
    stmt    := [NAME ':'] ( NAME '=' term ';'
                          | 'skip' ';'
                          | 'if' '(' rel ')' block ['else' block] [';']
                          | 'while' '(' rel ')' block [';'] )

``INT`` may carry a leading minus.  ``//`` starts a comment.  Locals are
introduced by assignment and must be assigned on every path before use.
"""

from __future__ import annotations

from typing import Optional

from .expr import ParseError, Rel, TokenStream, parse_rel_from, parse_term_from, term_vars, tokenize, vars_of
from .lang import Assign, If, Param, Program, Skip, Stmt, While

KEYWORDS = {"fn", "int", "in", "if", "else", "while", "skip"}


class ScopeError(ParseError):
    pass


def parse_program(text: str) -> Program:
    ts = TokenStream(tokenize(text))
    ts.expect("fn")
    name = _name(ts)
    ts.expect("(")
    params: list[Param] = []
    if not ts.accept(")"):
        while True:
            params.append(_param(ts))
            if ts.accept(")"):
                break
            ts.expect(",")
    body = _block(ts)
    ts.expect_kind("eof")
    prog = Program(name, tuple(params), body)
    _check_labels(prog)
    check_scopes(prog)
    return prog


def _name(ts: TokenStream) -> str:
    t = ts.peek()
    if t.kind != "name" or t.text in KEYWORDS:
        raise ts.error(f"expected a name, found {t.text or 'end of input'!r}")
    ts.next()
    return t.text


def _int(ts: TokenStream) -> int:
    neg = ts.accept("-")
    t = ts.expect_kind("num")
    return -int(t.text) if neg else int(t.text)


def _param(ts: TokenStream) -> Param:
    tok = ts.peek()
    name = _name(ts)
    ts.expect(":")
    ts.expect("int")
    ts.expect("in")
    ts.expect("[")
    lo = _int(ts)
    ts.expect(",")
    hi = _int(ts)
    ts.expect("]")
    if lo > hi:
        raise ParseError(f"empty range for parameter {name!r}", tok.line, tok.col)
    return Param(name, lo, hi)


def _block(ts: TokenStream) -> tuple[Stmt, ...]:
    ts.expect("{")
    out: list[Stmt] = []
    while not ts.accept("}"):
        if ts.peek().kind == "eof":
            raise ts.error("unterminated block")
        out.append(_stmt(ts))
    return tuple(out)


def _stmt(ts: TokenStream) -> Stmt:
    label: Optional[str] = None
    if ts.peek().kind == "name" and ts.peek(1).text == ":" and ts.peek().text not in KEYWORDS:
        label = ts.next().text
        ts.next()
    t = ts.peek()
    if ts.accept("skip"):
        ts.expect(";")
        return Skip(label)
    if ts.accept("if"):
        cond = _cond(ts)
        then = _block(ts)
        orelse: tuple[Stmt, ...] = ()
        if ts.accept("else"):
            orelse = _block(ts)
        ts.accept(";")
        return If(cond, then, orelse, label)
    if ts.accept("while"):
        cond = _cond(ts)
        body = _block(ts)
        ts.accept(";")
        return While(cond, body, label)
    if t.kind == "name" and t.text not in KEYWORDS:
        var = _name(ts)
        ts.expect("=")
        value = parse_term_from(ts)
        ts.expect(";")
        return Assign(var, value, label)
    raise ts.error(f"expected a statement, found {t.text or 'end of input'!r}")


def _cond(ts: TokenStream) -> Rel:
    ts.expect("(")
    c = parse_rel_from(ts)
    ts.expect(")")
    return c


def _check_labels(p: Program) -> None:
    seen: set[str] = set()
    for lab in p.labels():
        if lab in seen:
            raise ParseError(f"duplicate label {lab!r}")
        seen.add(lab)
    names = {prm.name for prm in p.params}
    if len(names) != len(p.params):
        raise ParseError("duplicate parameter name")


def check_scopes(p: Program) -> None:
    """Flow-sensitive check that every variable is assigned before use."""
    _scope_block(p.body, {prm.name for prm in p.params})


def _scope_block(stmts: tuple[Stmt, ...], defined: set[str]) -> set[str]:
    defined = set(defined)
    for s in stmts:
        if isinstance(s, Assign):
            _need(term_vars(s.value), defined, s)
            defined.add(s.var)
        elif isinstance(s, If):
            _need(set(vars_of(s.cond)), defined, s)
            a = _scope_block(s.then, defined)
            b = _scope_block(s.orelse, defined)
            defined = a & b
        elif isinstance(s, While):
            _need(set(vars_of(s.cond)), defined, s)
            _scope_block(s.body, defined)
    return defined


def _need(names: set[str], defined: set[str], s: Stmt) -> None:
    missing = sorted(names - defined)
    if missing:
        where = f" at statement {s.label!r}" if s.label else ""
        raise ScopeError(f"variable {missing[0]!r} may be used before assignment{where}")
