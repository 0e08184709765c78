"""Constraint store: domains, propagators, trail and labelling search.

Propagators are scheduled in five priority buckets (cheapest first)::

    0  interval / bound-consistency propagators
    1  domain-consistency propagators (``consistency="domain"``)
    2  the polyhedral filter (``consistency="poly"``)
    3  guarded constraints, conditionals and the w-operator rules
    4  w-operator joins

Every change is recorded on a trail so that search can undo it exactly.
Failure is a state of the store (``store.failed``), never an exception.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from functools import lru_cache
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from . import simplex
from .domains import INF, ArcElement, Box, Interval
from .expr import Rel, difference, eval_constraint, is_linear_poly, negate, vars_of
from .filtering import domain_filter, revise_bounds
from .intervals import entailed_by_box
from .polycons import poly_filter

log = logging.getLogger(__name__)

ENTAILED = "entailed"
DISENTAILED = "disentailed"
UNKNOWN = "unknown"

PENDING = "pending"
FIRED = "fired"
DISCARDED = "discarded"

NPRIO = 5
DOMAIN_SET_MAX = 4096
TRIAL_BUDGET = 5_000


@dataclass
class Config:
    consistency: str = "bound"      # bound | domain | poly
    relax: str = "envelope"         # drop | envelope | corner
    widen_delay: int = 3
    max_unroll: int = 2_000
    max_rounds: int = 50
    join: str = "weak"              # weak | hull

    def __post_init__(self) -> None:
        if self.consistency not in ("bound", "domain", "poly"):
            raise ValueError(f"unknown consistency {self.consistency!r}")
        if self.relax not in ("drop", "envelope", "corner"):
            raise ValueError(f"unknown relaxation {self.relax!r}")
        if self.join not in ("weak", "hull"):
            raise ValueError(f"unknown join {self.join!r}")


@dataclass
class Stats:
    propagations: int = 0
    simplex_calls: int = 0
    w_awakenings: int = 0
    join_invocations: int = 0
    backtracks: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


class Propagator:
    """Base class.  ``run`` returns False on failure."""

    priority = 0

    def vars(self) -> Sequence[str]:
        return ()

    def run(self, store: "Store") -> bool:
        raise NotImplementedError


class RelPropagator(Propagator):
    priority = 0

    def __init__(self, c: Rel):
        self.c = c
        self._vars = vars_of(c)

    def vars(self) -> Sequence[str]:
        return self._vars

    def run(self, store: "Store") -> bool:
        box = {v: (store.lo[v], store.hi[v]) for v in self._vars}
        if not revise_bounds(self.c, box):
            return False
        return store.set_many(box)

    def __repr__(self) -> str:
        return f"RelPropagator({self.c})"


class DomainPropagator(Propagator):
    priority = 1

    def __init__(self, c: Rel):
        self.c = c
        self._vars = vars_of(c)

    def vars(self) -> Sequence[str]:
        return self._vars

    def run(self, store: "Store") -> bool:
        if any(store.sets.get(v) is None for v in self._vars):
            return True
        a = ArcElement(tuple(self._vars), tuple(store.sets[v] for v in self._vars))
        out = domain_filter(self.c, a)
        if out.is_empty():
            return False
        for v, s in zip(out.vars, out.sets):
            if not store.restrict_set(v, s):
                return False
        return True


@lru_cache(maxsize=None)
def _nonlinear(c: Rel) -> bool:
    return not is_linear_poly(difference(c))


class PolyPropagator(Propagator):
    """Global polyhedral filter over the nonlinear constraints and the linear
    constraints sharing a variable with them."""

    priority = 2

    def __init__(self) -> None:
        self.members: list[Rel] = []
        self._vars: set[str] = set()

    def vars(self) -> Sequence[str]:
        return tuple(self._vars)

    def refresh(self, rels: Sequence[Rel]) -> None:
        nonlinear = [c for c in rels if _nonlinear(c)]
        scope = set()
        for c in nonlinear:
            scope.update(vars_of(c))
        self.members = [c for c in rels if set(vars_of(c)) & scope]
        self._vars = set()
        for c in self.members:
            self._vars.update(vars_of(c))

    def run(self, store: "Store") -> bool:
        if not self.members:
            return True
        names = sorted(self._vars)
        b = Box(tuple(names), tuple(Interval(store.lo[v], store.hi[v]) for v in names))
        nb = poly_filter(self.members, b, store.config.relax)
        if nb.is_empty():
            return False
        return store.set_many({v: (i.lo, i.hi) for v, i in zip(nb.vars, nb.intervals)})


class GuardedConstraint(Propagator):
    """``guard -> body``: fires once the guard is entailed, is discarded once
    it is disentailed, suspends otherwise."""

    priority = 3

    def __init__(self, guard: Rel, body: Callable[["Store"], bool]):
        self.guard = guard
        self.body = body
        self.status = PENDING
        self._vars = vars_of(guard)

    def vars(self) -> Sequence[str]:
        return self._vars

    def run(self, store: "Store") -> bool:
        if self.status != PENDING:
            return True
        st = store.entailment_status(self.guard)
        if st == ENTAILED:
            store.set_attr(self, "status", FIRED)
            store.deactivate(self)
            return self.body(store)
        if st == DISENTAILED:
            store.set_attr(self, "status", DISCARDED)
            store.deactivate(self)
        return True


@dataclass
class SearchResult:
    status: str                      # found | exhausted | limit
    valuation: Optional[dict[str, int]]
    stats: Stats
    nodes: int = 0


class _TrialAbort(Exception):
    pass


class Store:
    def __init__(self, config: Optional[Config] = None, **kwargs):
        self.config = config or Config(**kwargs)
        self.lo: dict[str, float] = {}
        self.hi: dict[str, float] = {}
        self.sets: dict[str, Optional[tuple[int, ...]]] = {}
        self.props: list[Propagator] = []
        self.active: set[int] = set()
        self.watch: dict[str, list[Propagator]] = {}
        self.rels: list[Rel] = []
        self.queue = [deque() for _ in range(NPRIO)]
        self.queued: set[int] = set()
        self.trail: list[tuple] = []
        self.failed = False
        self.stats = Stats()
        self.budget_hit = False
        self.counters: dict[str, int] = {}
        self.wconstraints: list = []
        self._simplex0 = simplex.simplex_calls()
        self._trial_depth = 0
        self._trial_budget = 0
        self.poly: Optional[PolyPropagator] = None
        if self.config.consistency == "poly":
            self.poly = PolyPropagator()
            self._register(self.poly, watch=False)

    # -- variables ------------------------------------------------------

    def new_var(self, name: str, lo: float = -INF, hi: float = INF) -> str:
        if name in self.lo:
            raise ValueError(f"variable {name!r} already exists")
        self.lo[name] = lo
        self.hi[name] = hi
        s = None
        if (self.config.consistency == "domain" and math.isfinite(lo) and math.isfinite(hi)
                and hi - lo < DOMAIN_SET_MAX):
            s = tuple(range(lo, hi + 1))
        self.sets[name] = s
        self.trail.append(("var", name))
        if lo > hi:
            self.fail()
        return name

    def fresh(self, base: str, lo: float = -INF, hi: float = INF) -> str:
        n = self.counters.get(base, 0) + 1
        while f"{base}#{n}" in self.lo:
            n += 1
        self.counters[base] = n
        return self.new_var(f"{base}#{n}", lo, hi)

    def ensure(self, name: str) -> None:
        if name not in self.lo:
            self.new_var(name)

    def bounds(self, v: str) -> tuple[float, float]:
        return self.lo[v], self.hi[v]

    def is_fixed(self, v: str) -> bool:
        return self.lo[v] == self.hi[v]

    def value(self, v: str) -> int:
        if not self.is_fixed(v):
            raise ValueError(f"{v} is not fixed")
        return self.lo[v]

    def box(self, names: Optional[Iterable[str]] = None) -> Box:
        names = tuple(names) if names is not None else tuple(sorted(self.lo))
        if self.failed:
            return Box.empty(names)
        return Box(names, tuple(Interval(self.lo[v], self.hi[v]) for v in names))

    # -- domain updates -----------------------------------------------------

    def set_bounds(self, v: str, lo: float, hi: float) -> bool:
        if self.failed:
            return False
        olo, ohi = self.lo[v], self.hi[v]
        nlo, nhi = max(olo, lo), min(ohi, hi)
        if nlo == olo and nhi == ohi:
            return True
        if nlo > nhi:
            self.fail()
            return False
        old_set = self.sets.get(v)
        self.trail.append(("b", v, olo, ohi, old_set))
        if old_set is not None:
            s = tuple(x for x in old_set if nlo <= x <= nhi)
            if not s:
                self.fail()
                return False
            self.sets[v] = s
            nlo, nhi = s[0], s[-1]
        self.lo[v], self.hi[v] = nlo, nhi
        self._schedule_var(v)
        return True

    def set_many(self, box: dict) -> bool:
        for v, (lo, hi) in box.items():
            if (lo, hi) != (self.lo[v], self.hi[v]):
                if not self.set_bounds(v, lo, hi):
                    return False
        return True

    def restrict_set(self, v: str, values: Sequence[int]) -> bool:
        old = self.sets.get(v)
        if old is None:
            return self.set_bounds(v, values[0], values[-1]) if values else self._failv()
        keep = tuple(x for x in old if x in set(values))
        if keep == old:
            return True
        if not keep:
            return self._failv()
        self.trail.append(("b", v, self.lo[v], self.hi[v], old))
        self.sets[v] = keep
        self.lo[v], self.hi[v] = keep[0], keep[-1]
        self._schedule_var(v)
        return True

    def _failv(self) -> bool:
        self.fail()
        return False

    def fail(self) -> None:
        if not self.failed:
            self.trail.append(("attr", self, "failed", False))
            self.failed = True
        for q in self.queue:
            q.clear()
        self.queued.clear()

    def set_attr(self, obj, name: str, value) -> None:
        self.trail.append(("attr", obj, name, getattr(obj, name)))
        setattr(obj, name, value)

    # -- propagators ----------------------------------------------------------

    def _register(self, p: Propagator, watch: bool = True) -> None:
        self.props.append(p)
        self.active.add(id(p))
        if watch:
            for v in p.vars():
                self.ensure(v)
                self.watch.setdefault(v, []).append(p)
        self.trail.append(("prop", p, watch))

    def add_propagator(self, p: Propagator) -> bool:
        if self.failed:
            return False
        self._register(p)
        self._enqueue(p)
        return True

    def deactivate(self, p: Propagator) -> None:
        if id(p) in self.active:
            self.active.discard(id(p))
            self.trail.append(("inactive", p))

    def is_active(self, p: Propagator) -> bool:
        return id(p) in self.active

    def post(self, c: Rel) -> bool:
        """Record ``c`` and run its interval propagator once."""
        if self.failed:
            return False
        for v in vars_of(c):
            self.ensure(v)
        p = RelPropagator(c)
        self._register(p)
        self.rels.append(c)
        self.trail.append(("rel",))
        if self.config.consistency == "domain":
            self.add_propagator(DomainPropagator(c))
        if self.poly is not None:
            self.poly.refresh(self.rels)
            self._enqueue(self.poly)
        if not p.run(self):
            self.fail()
            return False
        self._enqueue(p)
        return True

    def post_all(self, cs: Iterable[Rel]) -> bool:
        return all(self.post(c) for c in cs)

    def _enqueue(self, p: Propagator) -> None:
        if id(p) in self.queued or id(p) not in self.active:
            return
        self.queued.add(id(p))
        self.queue[p.priority].append(p)

    def _schedule_var(self, v: str) -> None:
        for p in self.watch.get(v, ()):
            self._enqueue(p)
        if self.poly is not None and v in self.poly._vars:
            self._enqueue(self.poly)

    def propagate(self, max_priority: int = NPRIO - 1) -> bool:
        """Run scheduled propagators to quiescence, lowest priority first."""
        if self.failed:
            return False
        while True:
            p = None
            for prio in range(max_priority + 1):
                if self.queue[prio]:
                    p = self.queue[prio].popleft()
                    break
            if p is None:
                return True
            self.queued.discard(id(p))
            if id(p) not in self.active:
                continue
            if self._trial_depth:
                self._trial_budget -= 1
                if self._trial_budget < 0:
                    raise _TrialAbort
            self.stats.propagations += 1
            if not p.run(self):
                self.fail()
                return False
            if self.failed:
                return False

    # -- trail -----------------------------------------------------------

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            e = self.trail.pop()
            kind = e[0]
            if kind == "b":
                _, v, lo, hi, s = e
                self.lo[v], self.hi[v], self.sets[v] = lo, hi, s
            elif kind == "attr":
                setattr(e[1], e[2], e[3])
            elif kind == "prop":
                p, watched = e[1], e[2]
                self.props.pop()
                self.active.discard(id(p))
                if watched:
                    for v in p.vars():
                        self.watch[v].pop()
            elif kind == "inactive":
                self.active.add(id(e[1]))
            elif kind == "var":
                v = e[1]
                del self.lo[v], self.hi[v], self.sets[v]
                self.watch.pop(v, None)
            elif kind == "rel":
                self.rels.pop()
                if self.poly is not None:
                    self.poly.refresh(self.rels)
            elif kind == "w":
                self.wconstraints.pop()
        for q in self.queue:
            q.clear()
        self.queued.clear()

    # -- entailment ------------------------------------------------------------

    def trial(self, action: Callable[["Store"], bool], budget: int = TRIAL_BUDGET):
        """Run ``action`` then bound-level propagation, and undo it all.

        Returns ``(failed, changes)`` where ``changes`` maps each
        pre-existing variable whose bounds moved to its trial bounds;
        ``failed`` is None when the trial ran out of budget.
        """
        saved_queue = [list(q) for q in self.queue]
        saved_queued = set(self.queued)
        saved_budget = self._trial_budget
        m = self.mark()
        self._trial_depth += 1
        self._trial_budget = budget
        existing = set(self.lo)
        failed: Optional[bool]
        changes: dict[str, tuple] = {}
        try:
            ok = action(self) and self.propagate(max_priority=1)
            failed = not ok
            if ok:
                for e in self.trail[m:]:
                    if e[0] == "b" and e[1] in existing:
                        changes[e[1]] = (self.lo[e[1]], self.hi[e[1]])
        except _TrialAbort:
            failed = None
        finally:
            self._trial_depth -= 1
            self._trial_budget = saved_budget
            self.undo(m)
            for q, items in zip(self.queue, saved_queue):
                q.extend(items)
            self.queued = saved_queued
        return failed, changes

    def trial_fails(self, cs: Sequence[Rel]) -> bool:
        failed, _ = self.trial(lambda s: s.post_all(cs))
        return failed is True

    def entailment_status(self, c: Rel) -> str:
        """Sound (never complete) decision at bound-consistency level."""
        if self.failed:
            return UNKNOWN
        box = {v: (self.lo[v], self.hi[v]) for v in vars_of(c) if v in self.lo}
        quick = entailed_by_box(c, box)
        if quick is True:
            return ENTAILED
        if quick is False:
            return DISENTAILED
        if self.trial_fails([negate(c)]):
            return ENTAILED
        if self.trial_fails([c]):
            return DISENTAILED
        return UNKNOWN

    # -- search ---------------------------------------------------------------

    def snapshot_stats(self) -> Stats:
        self.stats.simplex_calls = simplex.simplex_calls() - self._simplex0
        return self.stats

    def label_search(self, targets: Sequence[str], limit: Optional[int] = None,
                     accept: Optional[Callable[[dict[str, int]], bool]] = None) -> SearchResult:
        """Depth-first labelling: smallest domain first, smallest value first.

        ``targets`` are labelled first, then every other finite variable of
        the posted constraints.  ``limit`` bounds the number of backtracks.
        ``accept`` may reject a complete valuation (counted as a backtrack).
        """
        for v in targets:
            self.ensure(v)
        self._nodes = 0
        self._limit = limit
        m = self.mark()
        try:
            found = self._search(list(targets), accept)
        except _LimitReached:
            self.undo(m)
            return SearchResult("limit", None, self.snapshot_stats(), self._nodes)
        if found is None:
            self.undo(m)
            return SearchResult("exhausted", None, self.snapshot_stats(), self._nodes)
        return SearchResult("found", found, self.snapshot_stats(), self._nodes)

    def _pick(self, targets: list[str]) -> Optional[str]:
        def size(v: str) -> float:
            return self.hi[v] - self.lo[v]
        open_targets = [v for v in targets if not self.is_fixed(v)]
        if open_targets:
            return min(open_targets, key=size)
        others = sorted({v for c in self.rels for v in vars_of(c)
                         if v in self.lo and not self.is_fixed(v)
                         and math.isfinite(self.lo[v]) and math.isfinite(self.hi[v])})
        if others:
            return min(others, key=size)
        return None

    def _leaf(self, targets: list[str], accept) -> Optional[dict[str, int]]:
        val = {v: self.lo[v] for v in self.lo if self.is_fixed(v)}
        for c in self.rels:
            if all(v in val for v in vars_of(c)) and not eval_constraint(c, val):
                return None
        if accept is not None and not accept(val):
            return None
        return val

    def _backtrack(self) -> None:
        self.stats.backtracks += 1
        if self._limit is not None and self.stats.backtracks > self._limit:
            raise _LimitReached

    def _search(self, targets: list[str], accept) -> Optional[dict[str, int]]:
        if not self.propagate():
            return None
        v = self._pick(targets)
        if v is None:
            return self._leaf(targets, accept)
        if not (math.isfinite(self.lo[v]) and math.isfinite(self.hi[v])):
            raise ValueError(f"cannot label unbounded variable {v}")
        while True:
            self._nodes += 1
            s = self.sets.get(v)
            x = s[0] if s is not None else self.lo[v]
            m = self.mark()
            if self.set_bounds(v, x, x):
                found = self._search(targets, accept)
                if found is not None:
                    return found
            self.undo(m)
            self._backtrack()
            # right branch: v > x, at this level
            if x >= self.hi[v]:
                return None
            if s is not None:
                if not self.restrict_set(v, s[1:]):
                    return None
            elif not self.set_bounds(v, x + 1, self.hi[v]):
                return None
            if not self.propagate():
                return None


class _LimitReached(Exception):
    pass
