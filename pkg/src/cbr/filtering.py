"""Filtering operators: exact (concrete), domain- and bound-consistency.

``exact_filter`` and ``solve_exact`` work on explicit tuple sets and serve
as the ground truth.  ``domain_filter`` keeps exactly the values that have
a support; ``bound_filter`` first narrows with interval propagation (HC4)
and then shaves each finite bound until it has an integer support inside
the current box.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from . import intervals as iv
from .domains import INF, ArcElement, Box, Interval, TupleSet
from .expr import Rel, Var, eval_constraint, iter_subterms, linear_form, vars_of

log = logging.getLogger(__name__)

SUPPORT_NODE_BUDGET = 20_000
SHAVE_LIMIT = 2_000


# -- exact (concrete) -------------------------------------------------------

def exact_filter(c: Rel, s: TupleSet) -> TupleSet:
    missing = set(vars_of(c)) - set(s.vars)
    if missing:
        raise ValueError(f"tuple set lacks variables {sorted(missing)}")
    return s.filter(lambda v: eval_constraint(c, v))


def solve_exact(cs: Iterable[Rel], d: TupleSet) -> TupleSet:
    """Greatest fixpoint of the composed exact filters starting from ``d``."""
    cs = list(cs)
    cur = d
    while True:
        nxt = cur
        for c in cs:
            nxt = exact_filter(c, nxt)
        if nxt == cur:
            return cur
        cur = nxt


# -- support search -----------------------------------------------------------

class _Budget:
    def __init__(self, nodes: int):
        self.nodes = nodes


def _search(c: Rel, names: list[str], box: dict, sets: Optional[dict],
            budget: _Budget) -> Optional[dict]:
    """Find an integer solution of ``c`` with every var in ``box`` (and in
    ``sets`` when given).  Returns the valuation, ``None`` if none exists;
    raises ``_OutOfBudget`` when the node budget runs out."""
    budget.nodes -= 1
    if budget.nodes < 0:
        raise _OutOfBudget
    if not iv.hc4(c, box, max_iter=8):
        return None
    if sets is not None:
        for v in names:
            lo, hi = box[v]
            vals = [x for x in sets[v] if lo <= x <= hi]
            if not vals:
                return None
            box[v] = (vals[0], vals[-1])
    free = [v for v in names if box[v][0] != box[v][1]]
    if not free:
        val = {v: box[v][0] for v in names}
        return val if eval_constraint(c, val) else None
    v = min(free, key=lambda n: box[n][1] - box[n][0])
    lo, hi = box[v]
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise _OutOfBudget
    if sets is not None:
        candidates = [x for x in sets[v] if lo <= x <= hi]
    else:
        candidates = range(lo, hi + 1)
    for x in candidates:
        sub = dict(box)
        sub[v] = (x, x)
        found = _search(c, names, sub, sets, budget)
        if found is not None:
            return found
    return None


class _OutOfBudget(Exception):
    pass


# -- domain consistency -------------------------------------------------------

def domain_filter(c: Rel, a: ArcElement) -> ArcElement:
    """``alpha_arc(exact_filter(c, gamma_arc(a)))`` by per-value supports."""
    if a.is_empty():
        return ArcElement(a.vars, tuple(() for _ in a.vars))
    names = list(vars_of(c))
    doms = a.as_dict()
    missing = [v for v in names if v not in doms]
    if missing:
        raise ValueError(f"arc element lacks variables {missing}")
    sets = {v: doms[v] for v in names}
    supported: dict[str, set[int]] = {v: set() for v in names}
    for v in names:
        for x in sets[v]:
            if x in supported[v]:
                continue
            box = {n: (sets[n][0], sets[n][-1]) for n in names}
            box[v] = (x, x)
            sol = _search(c, names, box, sets, _Budget(10**9))
            if sol is not None:
                for n in names:
                    supported[n].add(sol[n])
    if names and any(not supported[v] for v in names):
        return ArcElement(a.vars, tuple(() for _ in a.vars))
    if not names and not eval_constraint(c, {}):
        return ArcElement(a.vars, tuple(() for _ in a.vars))
    out = [tuple(x for x in s if x in supported[v]) if v in supported else s
           for v, s in zip(a.vars, a.sets)]
    return ArcElement(a.vars, tuple(out))


# -- bound consistency ----------------------------------------------------------

@lru_cache(maxsize=None)
def _unit_linear(c: Rel) -> bool:
    """Linear with all coefficients in {-1, 1} and no repeated variable:
    interval propagation is then already bound-consistent."""
    lf = linear_form(c)
    if lf is None:
        return False
    return all(abs(a) == 1 for _, a in lf.expression.terms) and _no_repeats(c)


def _no_repeats(c: Rel) -> bool:
    seen: list[str] = []
    for side in (c.left, c.right):
        for t in iter_subterms(side):
            if isinstance(t, Var):
                seen.append(t.name)
    return len(seen) == len(set(seen))


def revise_bounds(c: Rel, box: dict, exact: bool = True) -> bool:
    """Narrow ``box`` (dict of var -> (lo, hi)) to bound consistency of ``c``.

    Mutates ``box``; returns False on failure.
    """
    if not iv.hc4(c, box):
        return False
    if not exact or _unit_linear(c):
        return True
    names = list(vars_of(c))
    changed = True
    while changed:
        changed = False
        for v in names:
            lo, hi = box[v]
            new_lo = _shave(c, names, box, v, lo, hi, +1)
            if new_lo is None:
                return False
            if new_lo != lo:
                box[v] = (new_lo, hi)
                changed = True
                if not iv.hc4(c, box):
                    return False
            lo, hi = box[v]
            new_hi = _shave(c, names, box, v, hi, lo, -1)
            if new_hi is None:
                return False
            if new_hi != hi:
                box[v] = (lo, new_hi)
                changed = True
                if not iv.hc4(c, box):
                    return False
    return True


def _shave(c: Rel, names, box, v, start, stop, step) -> Optional[float]:
    """First value from ``start`` towards ``stop`` with a support; ``None``
    if there is none; the original bound when the search gives up."""
    if not math.isfinite(start):
        return start
    x = start
    for _ in range(SHAVE_LIMIT):
        if (step > 0 and x > stop) or (step < 0 and x < stop):
            return None
        sub = dict(box)
        sub[v] = (x, x)
        try:
            if _search(c, names, sub, None, _Budget(SUPPORT_NODE_BUDGET)) is not None:
                return x
        except _OutOfBudget:
            return x
        x += step
    return x


def bound_filter(c: Rel, b: Box) -> Box:
    """Bound-consistent narrowing of ``b`` for one constraint."""
    if b.is_empty():
        return b
    box = {v: (i.lo, i.hi) for v, i in zip(b.vars, b.intervals)}
    for v in vars_of(c):
        box.setdefault(v, (-INF, INF))
    if not revise_bounds(c, box):
        return Box.empty(b.vars)
    return Box(b.vars, tuple(Interval(*box[v]) for v in b.vars))


def bound_fixpoint(cs: Sequence[Rel], b: Box, exact: bool = True) -> Box:
    """Chaotic iteration of :func:`bound_filter` over ``cs``."""
    if b.is_empty():
        return b
    box = {v: (i.lo, i.hi) for v, i in zip(b.vars, b.intervals)}
    if not propagate_dict(cs, box, exact):
        return Box.empty(b.vars)
    return Box(b.vars, tuple(Interval(*box[v]) for v in b.vars))


def propagate_dict(cs: Sequence[Rel], box: dict, exact: bool = True) -> bool:
    watch: dict[str, list[int]] = {}
    cvars = [vars_of(c) for c in cs]
    for k, vs in enumerate(cvars):
        for v in vs:
            watch.setdefault(v, []).append(k)
            box.setdefault(v, (-INF, INF))
    queue = list(range(len(cs)))
    queued = set(queue)
    while queue:
        k = queue.pop(0)
        queued.discard(k)
        before = {v: box[v] for v in cvars[k]}
        if not revise_bounds(cs[k], box, exact):
            return False
        for v in cvars[k]:
            if box[v] != before[v]:
                for j in watch[v]:
                    if j != k and j not in queued:
                        queue.append(j)
                        queued.add(j)
    return True


def domain_fixpoint(cs: Sequence[Rel], a: ArcElement) -> ArcElement:
    cur = a
    while True:
        nxt = cur
        for c in cs:
            nxt = domain_filter(c, nxt)
            if nxt.is_empty():
                return nxt
        if nxt == cur:
            return cur
        cur = nxt
