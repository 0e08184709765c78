from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from cbr.lang import interpret
from cbr.program import parse_program
from cbr.reach import BUDGET, EXHAUSTED, FOUND, solve_reachability
from cbr.store import Config
from helpers import random_program


@pytest.mark.parametrize("consistency", ["bound", "domain", "poly"])
@pytest.mark.parametrize("join", ["weak", "hull"])
def test_f_witness(f_program, consistency, join):
    a = solve_reachability(f_program, "f", Config(consistency=consistency, join=join))
    assert a.status == FOUND and a.witness == {"i": 401}
    assert a.stats.backtracks == 0
    assert a.bounds_after_propagation["i"][0] >= 401
    assert interpret(f_program, a.witness).visited("f")


def test_f_unreachable(f_unreachable):
    a = solve_reachability(f_unreachable, "f")
    assert a.status == EXHAUSTED and a.witness is None


def test_unreachable_variant_by_brute_force(f_unreachable):
    assert not any(interpret(f_unreachable, {"i": i}).visited("f") for i in range(0, 2001))


def test_first_statement(f_program):
    a = solve_reachability(f_program, "a")
    assert a.status == FOUND and a.witness == {"i": 0}


def test_invariants_are_reported(f_program):
    a = solve_reachability(f_program, "f")
    inv = a.invariants[0]
    assert inv["label"] == "b" and "P" in inv and "Q" in inv
    assert "100 + i#1 - i#2 - j#2 = 0" in inv["P"]


def test_budget(f_program):
    a = solve_reachability(f_program, "f", Config(max_unroll=50))
    assert a.status == BUDGET and a.witness is None


NESTED = """fn g(n: int in [0, 6], m: int in [0, 6]) {
  s = 0; k = n;
  o: while (k > 0) { r = m; inner: while (r > 0) { s = s + 1; r = r - 1; } k = k - 1; }
  if (s == S) { t: skip; }
}"""


@pytest.mark.parametrize("target_sum", [0, 5, 12, 13, 36, 37])
def test_nested_loops_agree_with_the_interpreter(target_sum):
    p = parse_program(NESTED.replace("S", str(target_sum)))
    a = solve_reachability(p, "t")
    reach = [(n, m) for n, m in itertools.product(range(7), range(7))
             if interpret(p, {"n": n, "m": m}).visited("t")]
    assert (a.status == FOUND) == bool(reach)
    if a.witness:
        assert (a.witness["n"], a.witness["m"]) in reach


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["bound", "domain", "poly"]))
def test_random_programs_agree_with_the_interpreter(seed, consistency):
    src, target = random_program(random.Random(seed))
    p = parse_program(src)
    a = solve_reachability(p, target, Config(consistency=consistency))
    reach = [dict(a=x, b=y) for x in range(-3, 4) for y in range(0, 4)
             if interpret(p, {"a": x, "b": y}).visited(target)]
    assert a.status != BUDGET, src
    assert (a.status == FOUND) == bool(reach), src
    if a.status == FOUND:
        assert interpret(p, a.witness).visited(target)
