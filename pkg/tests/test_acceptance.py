"""Acceptance gate.

Every criterion prints one ``PASS``/``FAIL`` line with its measured time
and pinned limit; the lines are repeated in the terminal summary.  Random
instances use fixed seeds so the gate is reproducible.  Run standalone with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import random
import time
from fractions import Fraction

from cbr.domains import Box, OracleCapExceeded, TupleSet, alpha_arc, alpha_inter, gamma_arc, gamma_inter
from cbr.expr import parse_constraint
from cbr.filtering import bound_filter, bound_fixpoint, domain_filter, domain_fixpoint, exact_filter, solve_exact
from cbr.lang import interpret
from cbr.linear import LinearExpression as L, eq, ge, le
from cbr.polycons import mixed_fixpoint, poly_filter
from cbr.polyhedra import Polyhedron, alpha_box, includes, reduce
from cbr.program import parse_program
from cbr.reach import FOUND, solve_reachability
from cbr.relaxation import STRATEGIES, relax
from cbr.simplex import OPTIMAL, clear_cache, maximize
from cbr.store import Config, Store
from cbr.wconstraint import WConstraint, abstract_fixpoint, concrete_fixpoint, project_solutions
from helpers import (box_tuples, loop_constraint, random_affine_loop, random_arc, random_box,
                     random_constraint, with_products)

RESULTS: dict[int, str] = {}


def report(n: int, title: str, ok: bool, elapsed: float, limit: float, detail: str = "") -> bool:
    ok = ok and elapsed < limit
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {title} [{elapsed:.3f}s, limit {limit}s]"
    if detail:
        line += f" {detail}"
    RESULTS[n] = line
    print(line)
    return ok


# 1 ------------------------------------------------------------------------

def test_simplex_golden_value():
    x, y, z = L.var("X"), L.var("Y"), L.var("Z")
    system = [ge(x, -7), le(x, 10), ge(y, -7), le(y, 10), ge(z, 3), le(z, 10), eq(z, x + y),
              ge(x * 11 - y * 8 + 69, 0), ge(-x - y + 11, 0), ge(x * -8 + y * 11 + 69, 0),
              ge(x + y + 8, 0)]
    clear_cache()
    t = time.perf_counter()
    r = maximize(system, x)
    dt = time.perf_counter() - t
    ok = r.status == OPTIMAL and isinstance(r.value, Fraction) and r.value == Fraction(179, 19)
    assert report(1, "max X = 179/19 exactly", ok, dt, 0.1, f"got {r.value}")


# 2 ------------------------------------------------------------------------

def test_nonlinear_system_trace():
    cs = [parse_constraint("z = x + y"), parse_constraint("z = x * y")]
    start = Box.of({"x": (-7, 10), "y": (-7, 10), "z": (3, 10)})
    t = time.perf_counter()
    first = poly_filter(cs, start)
    second = poly_filter(cs, first)
    after_bound = bound_fixpoint(cs, second)
    r = mixed_fixpoint(cs, start)
    dt = time.perf_counter() - t
    ok = ((first["x"], first["y"]) == ((-2, 9), (-2, 9))
          and (second["x"], second["y"]) == ((0, 8), (0, 8))
          and (after_bound["x"], after_bound["y"]) == ((1, 8), (1, 8))
          and r.stable and r.rounds <= 10
          and r.box == Box.of({"x": (2, 2), "y": (2, 2), "z": (4, 4)}))
    assert report(2, "poly/bound trace ends at x=y=2, z=4", ok, dt, 1.0, f"rounds={r.rounds}")


# 3, 4 ---------------------------------------------------------------------

def _x_loop() -> WConstraint:
    body = parse_program("fn g(x: int in [0, 1]) { x = x + 1; }").body
    return WConstraint({"x": "x_in"}, {"x": "x_out"}, parse_constraint("x < 2"), body)


def test_concrete_w_oracle():
    init = TupleSet.of(("x_in",), [(0,), (1,), (2,), (3,)])
    t = time.perf_counter()
    T, Z = concrete_fixpoint(_x_loop(), init)
    dt = time.perf_counter() - t
    ok = (T.tuples == {(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2), (3, 3)}
          and Z.tuples == {(0, 2), (1, 2), (2, 2), (3, 3)})
    assert report(3, "concrete T and Z_w exact", ok, dt, 0.1)


def test_abstract_w_trace():
    xi, xo = L.var("x_in"), L.var("x_out")
    want_p = Polyhedron.of(("x_in", "x_out"),
                           [ge(xi, 0), le(xi, 3), le(xo, xi + 2), ge(xo, xi), le(xo, 4)])
    want_q = Polyhedron.of(("x_in", "x_out"),
                           [ge(xo, 2), le(xo, 4), le(xi, xo), le(xi, 3), ge(xi, xo - 2)])
    t = time.perf_counter()
    w = _x_loop()
    P, steps = abstract_fixpoint(w, alpha_box(Box.of({"x_in": (0, 3)})), widen_delay=3)
    Q = project_solutions(w, P)
    ok = (steps == 3 and includes(P, want_p) and includes(want_p, P)
          and includes(Q, want_q) and includes(want_q, Q))
    dt = time.perf_counter() - t
    assert report(4, "abstract w: 3 steps, P and Q as expected", ok, dt, 0.5, f"steps={steps}")


# 5 ------------------------------------------------------------------------

F_SOURCE = """fn f(i: int in [0, 100000]) {
  a: j = 100;
  b: while (i > 0) { c: j = j + 1; d: i = i - 1; }
  e: if (j > 500) { f: skip; }
}"""


def test_reachability_flagship():
    t = time.perf_counter()
    prog = parse_program(F_SOURCE)
    a = solve_reachability(prog, "f")
    confirmed = a.witness is not None and interpret(prog, a.witness).visited("f")
    dt = time.perf_counter() - t
    lo = a.bounds_after_propagation["i"][0]
    ok = (a.status == FOUND and a.witness == {"i": 401} and a.stats.backtracks == 0
          and lo >= 401 and confirmed)
    assert report(5, "f(i): witness i=401, no backtracking", ok, dt, 5.0,
                  f"witness={a.witness} backtracks={a.stats.backtracks} i>={lo}")


# 6 ------------------------------------------------------------------------

def test_oracle_equivalence():
    bad = 0
    t = time.perf_counter()
    for seed in range(100):
        rng = random.Random(seed)
        names = ["x", "y", "z"][:rng.randint(1, 3)]
        c, a = random_constraint(rng, names), random_arc(rng, names)
        if domain_filter(c, a) != alpha_arc(exact_filter(c, gamma_arc(a))):
            bad += 1
        b = alpha_inter(a)
        if bound_filter(c, b) != alpha_inter(domain_filter(c, gamma_inter(b))):
            bad += 1
    dt = time.perf_counter() - t
    assert report(6, "domain and bound filters equal their compositions", bad == 0, dt, 30.0,
                  f"counterexamples={bad}")


# 7 ------------------------------------------------------------------------

def _contains(b: Box, sols: TupleSet) -> bool:
    if b.is_empty():
        return len(sols) == 0
    idx = [sols.vars.index(v) for v in b.vars]
    return all(all(iv.lo <= t[k] <= iv.hi for k, iv in zip(idx, b.intervals)) for t in sols)


def _store_keeps(cs, box: Box, sols: TupleSet, consistency: str) -> bool:
    s = Store(Config(consistency=consistency))
    for v, iv in zip(box.vars, box.intervals):
        s.new_var(v, iv.lo, iv.hi)
    if not (s.post_all(cs) and s.propagate()):
        return len(sols) == 0
    return _contains(Box.of({v: s.bounds(v) for v in box.vars}), sols)


def _system_violations(rng: random.Random) -> int:
    names = ["x", "y", "z"]
    cs = [random_constraint(rng, names) for _ in range(rng.randint(1, 3))]
    box = random_box(rng, names)
    sols = solve_exact(cs, box_tuples(box))
    bad = 0
    bad += not _contains(bound_fixpoint(cs, box), sols)
    bad += not _contains(alpha_inter(domain_fixpoint(cs, gamma_inter(box))), sols)
    for strategy in STRATEGIES:
        bad += not _contains(poly_filter(cs, box, strategy), sols)
        bad += not _contains(mixed_fixpoint(cs, box, strategy).box, sols)
    for consistency in ("bound", "domain", "poly"):
        bad += not _store_keeps(cs, box, sols, consistency)
    for c in cs:
        for strategy in STRATEGIES:
            facets = relax(c, box, strategy)
            used = {v for f in facets for v in f.variables}
            for env in sols.valuations():
                env = with_products(env, used)
                bad += not all(f.satisfied_by(env) for f in facets)
    return bad


def _loop_violations(rng: random.Random) -> int:
    dec, body, init = random_affine_loop(rng)
    w = loop_constraint(dec, body)
    box = Box(tuple(w.m1.values()), init.intervals)
    start = TupleSet.of(box.vars, itertools.product(*[range(iv.lo, iv.hi + 1) for iv in box.intervals]))
    try:
        T, Z = concrete_fixpoint(w, start, cap=400)
    except OracleCapExceeded:
        return 0
    bad = 0
    for join_mode in ("weak", "hull"):
        P, _ = abstract_fixpoint(w, alpha_box(box), join_mode=join_mode)
        Q = project_solutions(w, P)
        bad += sum(not P.contains_point(t) for t in T.valuations())
        bad += sum(not Q.contains_point(z) for z in Z.valuations())
    return bad


def test_soundness_sweep():
    bad = 0
    t = time.perf_counter()
    for seed in range(100):
        rng = random.Random(10_000 + seed)
        bad += _system_violations(rng)
        bad += _loop_violations(rng)
    dt = time.perf_counter() - t
    assert report(7, "no filter, relaxation or abstract loop loses a solution", bad == 0, dt, 60.0,
                  f"violations={bad}")


# 8 ------------------------------------------------------------------------

def test_widening_termination():
    delay = 3
    late = []
    t = time.perf_counter()
    for seed in range(50):
        dec, body, init = random_affine_loop(random.Random(20_000 + seed))
        w = loop_constraint(dec, body)
        trace: list = []
        _, steps = abstract_fixpoint(w, alpha_box(Box(tuple(w.m1.values()), init.intervals)),
                                     widen_delay=delay, trace=trace)
        bound = delay
        if len(trace) > delay:
            bound += sum(len(c.as_inequalities()) for c in reduce(trace[delay]).constraints)
        if steps > bound:
            late.append(seed)
    dt = time.perf_counter() - t
    assert report(8, "widening stabilises within delay + facets", not late, dt, 30.0,
                  f"over budget={late}")


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            try:
                fn()
            except AssertionError:
                pass
