from __future__ import annotations

import random

from hypothesis import given, settings, strategies as st

from cbr.domains import Box, lattice_ops
from cbr.expr import parse_constraint
from cbr.filtering import bound_filter, bound_fixpoint
from cbr.polycons import mixed_fixpoint, poly_filter
from cbr.relaxation import CORNER, ENVELOPE
from helpers import inside, random_box, random_constraint, solutions

CS = [parse_constraint("z = x + y"), parse_constraint("z = x * y")]
START = Box.of({"x": (-7, 10), "y": (-7, 10), "z": (3, 10)})


def test_first_poly_round():
    want = Box.of({"x": (-2, 9), "y": (-2, 9), "z": (3, 10)})
    assert poly_filter(CS, START, ENVELOPE) == want
    assert poly_filter(CS, START, CORNER) == want


def test_second_round_then_bound():
    b = Box.of({"x": (-2, 9), "y": (-2, 9), "z": (3, 10)})
    p = poly_filter(CS, b, ENVELOPE)
    assert (p["x"], p["y"]) == ((0, 8), (0, 8))
    q = bound_fixpoint(CS, p)
    assert (q["x"], q["y"]) == ((1, 8), (1, 8))


def test_mixed_fixpoint_reaches_the_solution():
    r = mixed_fixpoint(CS, START, ENVELOPE)
    assert r.stable and r.rounds <= 10
    assert r.box == Box.of({"x": (2, 2), "y": (2, 2), "z": (4, 4)})
    assert r.trace[0] == ("poly", Box.of({"x": (-2, 9), "y": (-2, 9), "z": (3, 10)}))


def test_linear_and_inconsistent_systems():
    lin = [parse_constraint("x + y <= 3"), parse_constraint("x >= y")]
    b = Box.of({"x": (0, 10), "y": (0, 10)})
    once = poly_filter(lin, b)
    assert poly_filter(lin, once) == once
    r = mixed_fixpoint([parse_constraint("x >= 1"), parse_constraint("x <= 0")], Box.of({"x": (-5, 5)}))
    assert r.box.is_empty() and r.rounds == 1


def _system(seed):
    rng = random.Random(seed)
    names = ["x", "y", "z"]
    cs = [random_constraint(rng, names) for _ in range(rng.randint(1, 3))]
    return cs, random_box(rng, names, width=5)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([ENVELOPE, CORNER]))
def test_mixed_fixpoint_is_sound_and_stronger_than_bounds(seed, strategy):
    cs, b = _system(seed)
    r = mixed_fixpoint(cs, b, strategy)
    for s in solutions(cs, b):
        assert not r.box.is_empty() and inside(s, r.box)
    assert lattice_ops("bound").leq(r.box, bound_fixpoint(cs, b))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_poly_filter_is_idempotent_at_a_fixpoint(seed):
    cs, b = _system(seed)
    r = mixed_fixpoint(cs, b)
    if r.stable and not r.box.is_empty():
        assert poly_filter(cs, r.box) == r.box
        for c in cs:
            assert bound_filter(c, r.box) == r.box
