"""Random small constraint systems and brute-force oracles for the tests."""

from __future__ import annotations

import itertools
import math
import random
from typing import Sequence

from cbr.domains import ArcElement, Box, TupleSet
from cbr.expr import BinOp, Const, Rel, Term, Var, eval_constraint

OPS = ("<", "<=", ">", ">=", "=", "!=")


def random_term(rng: random.Random, names: Sequence[str], depth: int = 2) -> Term:
    if depth == 0 or rng.random() < 0.35:
        if rng.random() < 0.75:
            return Var(rng.choice(names))
        return Const(rng.randint(-3, 3))
    op = rng.choice("++-*")
    return BinOp(op, random_term(rng, names, depth - 1), random_term(rng, names, depth - 1))


def random_constraint(rng: random.Random, names: Sequence[str], depth: int = 2) -> Rel:
    return Rel(rng.choice(OPS), random_term(rng, names, depth), random_term(rng, names, depth))


def random_arc(rng: random.Random, names: Sequence[str], size: int = 4, span=(-3, 4)) -> ArcElement:
    sets = []
    for _ in names:
        k = rng.randint(1, size)
        sets.append(rng.sample(range(*span), k))
    return ArcElement.of(names, sets)


def random_box(rng: random.Random, names: Sequence[str], width: int = 4, span=(-4, 5)) -> Box:
    out = {}
    for v in names:
        lo = rng.randint(span[0], span[1] - 1)
        out[v] = (lo, lo + rng.randint(0, width - 1))
    return Box.of(out)


def box_points(b: Box) -> list[dict[str, int]]:
    ranges = [range(int(iv.lo), int(iv.hi) + 1) for iv in b.intervals]
    return [dict(zip(b.vars, t)) for t in itertools.product(*ranges)]


def box_tuples(b: Box) -> TupleSet:
    return TupleSet.product(b.vars, [range(int(iv.lo), int(iv.hi) + 1) for iv in b.intervals])


def solutions(cs: Sequence[Rel], b: Box) -> list[dict[str, int]]:
    return [p for p in box_points(b) if all(eval_constraint(c, p) for c in cs)]


def inside(p: dict[str, int], b: Box) -> bool:
    return all(iv.lo <= p[v] <= iv.hi for v, iv in zip(b.vars, b.intervals))


def random_affine_loop(rng: random.Random, names=("x", "y"), width: int = 3):
    """A single loop ``while (dec) body`` with affine guard and body, and an
    enumerable initial box, as (dec, body, init box over ``names``)."""
    from cbr.expr import Const as C, Rel as R
    from cbr.lang import Assign

    def affine(allow_zero: bool = True) -> Term:
        t: Term = C(rng.randint(-2, 2))
        for v in names:
            k = rng.choice([-1, 0, 0, 1, 1, 2]) if allow_zero else rng.choice([-1, 1])
            if k:
                t = BinOp("+", t, BinOp("*", C(k), Var(v)))
        return t

    dec = R(rng.choice(["<", "<=", ">", ">="]), affine(False), C(rng.randint(-3, 6)))
    body = tuple(Assign(v, affine()) for v in rng.sample(list(names), rng.randint(1, len(names))))
    init = random_box(rng, list(names), width=width, span=(-3, 4))
    return dec, body, init


def loop_constraint(dec, body, names=("x", "y")):
    """The ``w`` constraint of ``while (dec) body`` over ``names``: inputs
    ``v_in``, outputs ``v_out`` for the assigned variables."""
    from cbr.lang import assigned
    from cbr.wconstraint import WConstraint
    written = [v for v in assigned(body) if v in names]
    return WConstraint({v: f"{v}_in" for v in names}, {v: f"{v}_out" for v in written}, dec, body)


def with_products(env: dict[str, int], names) -> dict[str, int]:
    """``env`` extended with the values of relaxation product variables."""
    out = dict(env)
    for n in names:
        if "*" in n:
            out[n] = math.prod(env[p] for p in n.split("*"))
    return out


def random_program(rng: random.Random) -> tuple[str, str]:
    """Source of a small terminating program and the label of its target.

    Loops are counted down and never nested; nesting has its own test.
    """
    defined = ["a", "b"]
    counter = [0]
    labels: list[str] = []

    def expr() -> str:
        v = rng.choice(defined)
        w = rng.choice(defined)
        return rng.choice([f"{v} + {rng.randint(-2, 2)}", f"{v} - {w}", f"{v} * {w}",
                           f"{rng.randint(-3, 3)}", f"2 * {v} + {w}"])

    def cond() -> str:
        return f"{rng.choice(defined)} {rng.choice(['<', '<=', '>', '>=', '==', '!='])} {expr()}"

    def block(depth: int, in_loop: bool) -> list[str]:
        out = []
        for _ in range(rng.randint(1, 2 if in_loop else 3)):
            r = rng.random()
            if r < 0.45 or depth == 0:
                var = rng.choice([v for v in defined if not v.startswith("k")] + ["x", "y"])
                out.append(f"{var} = {expr()};")
                if var not in defined:
                    defined.append(var)
            elif r < 0.75 or in_loop:
                saved = list(defined)
                then = block(depth - 1, in_loop)
                defined[:] = saved
                orelse = block(depth - 1, in_loop)
                defined[:] = saved
                out.append(f"if ({cond()}) {{ {' '.join(then)} }} else {{ {' '.join(orelse)} }}")
            else:
                counter[0] += 1
                k = f"k{counter[0]}"
                defined.append(k)
                out.append(f"{k} = {rng.choice(['b', 'a', '3'])};")
                saved = list(defined)
                inner = block(depth - 1, True)
                defined[:] = saved
                out.append(f"while ({k} > 0) {{ {' '.join(inner)} {k} = {k} - 1; }}")
            if not in_loop and rng.random() < 0.4:
                lab = f"t{len(labels)}"
                labels.append(lab)
                out.append(f"{lab}: skip;")
        return out

    stmts = block(2, False)
    if not labels:
        labels.append("t0")
        stmts.append("t0: skip;")
    src = "fn r(a: int in [-3, 3], b: int in [0, 3]) { " + " ".join(stmts) + " }"
    return src, rng.choice(labels)
