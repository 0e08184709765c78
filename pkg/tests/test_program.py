from __future__ import annotations

import pytest

from cbr.expr import ParseError
from cbr.lang import Assign, If, While, interpret
from cbr.program import ScopeError, parse_program


def test_f_listing(f_program):
    assert f_program.name == "f"
    assert f_program.param_names() == ("i",)
    assert len(f_program.statements()) == 6
    assert f_program.labels() == ["a", "b", "c", "d", "e", "f"]
    assert isinstance(f_program.find("b"), While)
    assert isinstance(f_program.find("e"), If)
    assert isinstance(f_program.find("c"), Assign)


def test_empty_body():
    p = parse_program("fn g() { }")
    assert p.statements() == [] and p.params == ()


@pytest.mark.parametrize("src, exc", [
    ("fn g(x: int in [0, 3]) { y = z + 1; }", ScopeError),
    ("fn g(x: int in [0, 3]) { if (x > 0) { y = 1; } z = y; }", ScopeError),
    ("fn g(x: int in [0, 3]) { while (x > 0) { y = 1; x = x - 1; } z = y; }", ScopeError),
    ("fn g(x: int in [3, 0]) { }", ParseError),
    ("fn g(x: int in [0, 3]) { a: skip; a: skip; }", ParseError),
    ("fn g(x: int in [0, 3], x: int in [0, 1]) { }", ParseError),
    ("fn g(x: int in [0, 3]) { x = ; }", ParseError),
    ("fn g(x: int in [0, 3]) { x = 1 }", ParseError),
])
def test_errors(src, exc):
    with pytest.raises(exc):
        parse_program(src)


def test_error_carries_position():
    with pytest.raises(ParseError) as info:
        parse_program("fn g() {\n  x = 1 +;\n}")
    assert info.value.line == 2


def test_if_defines_when_both_branches_do():
    p = parse_program("fn g(x: int in [-2, 2]) { if (x > 0) { y = 1; } else { y = -1; } z = y * x; }")
    assert interpret(p, {"x": -2}).state["z"] == 2


def test_interpreter_on_f(f_program):
    r = interpret(f_program, {"i": 401})
    assert r.visited("f") and r.state["j"] == 501
    r = interpret(f_program, {"i": 0})
    assert not r.visited("f") and r.state["j"] == 100
    r = interpret(f_program, {"i": 400})
    assert not r.visited("f") and r.state["j"] == 500
    with pytest.raises(ValueError):
        interpret(f_program, {"i": -1})
    with pytest.raises(KeyError):
        interpret(f_program, {})


def test_step_budget_is_flagged():
    p = parse_program("fn g(x: int in [0, 1]) { w: while (x >= 0) { x = x + 1; } }")
    r = interpret(p, {"x": 0}, step_budget=100)
    assert r.budget_exceeded


def test_minimal_witness_by_brute_force(f_program):
    reaching = [i for i in range(0, 1001) if interpret(f_program, {"i": i}).visited("f")]
    assert reaching[0] == 401
