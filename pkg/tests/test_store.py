from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from cbr.expr import eval_constraint, parse_constraint
from cbr.store import (DISCARDED, DISENTAILED, ENTAILED, FIRED, PENDING, UNKNOWN, Config,
                       GuardedConstraint, Store)
from helpers import box_points, random_box, random_constraint, solutions

CS = ["z = x + y", "z = x * y"]


def _store(bounds, cs=(), **cfg) -> Store:
    s = Store(Config(**cfg))
    for v, (lo, hi) in bounds.items():
        s.new_var(v, lo, hi)
    for c in cs:
        s.post(parse_constraint(c) if isinstance(c, str) else c)
    return s


START = {"x": (-7, 10), "y": (-7, 10), "z": (3, 10)}


def test_config_validation():
    with pytest.raises(ValueError):
        Config(consistency="arc")
    with pytest.raises(ValueError):
        Config(relax="secant")


@pytest.mark.parametrize("bounds, want", [((0, 5), UNKNOWN), ((0, 1), ENTAILED), ((2, 5), DISENTAILED)])
def test_entailment(bounds, want):
    s = _store({"x": bounds})
    assert s.entailment_status(parse_constraint("x < 2")) == want


def test_entailment_through_propagation():
    s = _store({"x": (0, 5), "y": (0, 5)}, ["x + y = 5"])
    s.propagate()
    # x <= 5 - y cannot be read off the boxes of the two sides alone
    assert s.entailment_status(parse_constraint("x + y <= 5")) == ENTAILED


def test_post():
    s = _store({"x": (-5, 5)}, ["x >= 1"])
    assert not s.post(parse_constraint("x <= 0"))
    assert s.failed
    t = _store({"x": (0, 3)})
    assert t.post(parse_constraint("x = x")) and t.propagate()
    assert t.bounds("x") == (0, 3)


def test_post_registers_the_polyhedral_filter():
    s = _store(START, CS, consistency="poly")
    assert set(s.poly.vars()) == {"x", "y", "z"}
    assert s.propagate()
    assert s.box(["x", "y", "z"]).as_dict() == {"x": (2, 2), "y": (2, 2), "z": (4, 4)}


@pytest.mark.parametrize("consistency", ["bound", "domain"])
def test_bound_levels_leave_the_golden_box_and_search_finds_it(consistency):
    s = _store(START, CS, consistency=consistency)
    assert s.propagate()
    assert s.box(["x", "y", "z"]).as_dict() == {"x": (-7, 10), "y": (-7, 10), "z": (3, 10)}
    r = s.label_search(["x", "y", "z"])
    assert r.status == "found" and r.valuation == {"x": 2, "y": 2, "z": 4}


def test_triangle_is_refuted_by_search():
    s = _store({v: (1, 2) for v in "xyz"}, ["x != y", "y != z", "z != x"], consistency="domain")
    s.propagate()
    assert s.label_search(["x", "y", "z"]).status == "exhausted"


def test_labelling_order_and_failure():
    s = _store({"x": (0, 3)})
    assert s.label_search(["x"]).valuation == {"x": 0}
    f = _store({"x": (0, 3)}, ["x > 5"])
    assert f.label_search(["x"]).status == "exhausted"


def test_limit():
    s = _store({v: (0, 9) for v in "abc"}, ["a + b + c = 30"])
    r = s.label_search(["a", "b", "c"], limit=3)
    assert r.status in ("limit", "exhausted")


def test_guarded_constraint_lifecycle():
    s = _store({"x": (0, 5), "y": (0, 5)})
    g = GuardedConstraint(parse_constraint("x >= 3"), lambda st: st.post(parse_constraint("y = 1")))
    s.add_propagator(g)
    assert s.propagate() and g.status == PENDING
    m = s.mark()
    s.set_bounds("x", 4, 5)
    assert s.propagate() and g.status == FIRED and s.bounds("y") == (1, 1)
    s.undo(m)
    assert g.status == PENDING and s.bounds("y") == (0, 5)
    s.set_bounds("x", 0, 2)
    assert s.propagate() and g.status == DISCARDED and s.bounds("y") == (0, 5)


def test_trail_restores_the_box():
    s = _store(START, CS)
    before = s.box()
    m = s.mark()
    s.set_bounds("x", 2, 2)
    s.propagate()
    s.undo(m)
    assert s.box() == before


def _random_system(seed):
    rng = random.Random(seed)
    names = ["x", "y", "z"]
    cs = [random_constraint(rng, names) for _ in range(rng.randint(1, 3))]
    return rng, cs, random_box(rng, names, width=4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["bound", "domain", "poly"]))
def test_confluence_under_posting_order(seed, consistency):
    rng, cs, b = _random_system(seed)
    boxes = set()
    for _ in range(10):
        order = list(cs)
        rng.shuffle(order)
        s = _store({v: (iv.lo, iv.hi) for v, iv in zip(b.vars, b.intervals)}, order,
                   consistency=consistency)
        ok = not s.failed and s.propagate()
        boxes.add(s.box(b.vars) if ok else None)
    assert len(boxes) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["bound", "domain", "poly"]))
def test_labelling_soundness_and_completeness(seed, consistency):
    _, cs, b = _random_system(seed)
    sols = solutions(cs, b)
    s = _store({v: (iv.lo, iv.hi) for v, iv in zip(b.vars, b.intervals)}, cs, consistency=consistency)
    found = []
    if not s.failed and s.propagate():
        s.label_search(list(b.vars), accept=lambda v: found.append(v) or False)
    got = sorted(tuple(v[n] for n in b.vars) for v in found)
    assert got == sorted(tuple(p[n] for n in b.vars) for p in sols)
    for v in found:
        assert all(eval_constraint(c, v) for c in cs)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_guard_soundness(seed):
    rng, cs, b = _random_system(seed)
    guard = random_constraint(rng, ["x", "y", "z"], depth=1)
    s = _store({v: (iv.lo, iv.hi) for v, iv in zip(b.vars, b.intervals)}, cs)
    g = GuardedConstraint(guard, lambda st: True)
    s.add_propagator(g)
    if s.failed or not s.propagate():
        return
    pts = [p for p in box_points(s.box(b.vars)) if all(eval_constraint(c, p) for c in cs)]
    if g.status == FIRED:
        assert all(eval_constraint(guard, p) for p in pts)
    elif g.status == DISCARDED:
        assert not any(eval_constraint(guard, p) for p in pts)
