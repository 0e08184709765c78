"""SSA translation of programs into constraint items.

Each assignment gets a fresh solver variable ``v#n``.  A ``while`` becomes a
:class:`WSpec` (instantiated as a w constraint when posted) and an
``if``/``else`` becomes an :class:`IfSpec` whose branches assign to fresh
merge variables.  Items are plain data so a translation can be inspected,
dumped or posted into any store.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .expr import Rel, Var, negate, rename
from .lang import Assign, If, Program, Skip, Stmt, While, assigned, used, walk


@dataclass(frozen=True)
class WSpec:
    """``w(m1, m2, m3, dec, body)`` before it is attached to a store.

    ``m1`` covers every variable the loop reads or writes; ``m3`` only those
    it writes.  Read-only variables keep the same solver variable throughout.
    """

    m1: tuple[tuple[str, str], ...]
    m3: tuple[tuple[str, str], ...]
    dec: Rel
    body: tuple[Stmt, ...]
    label: Optional[str] = None


@dataclass(frozen=True)
class IfSpec:
    cond: Rel
    then: tuple["Item", ...]
    orelse: tuple["Item", ...]
    merges: tuple[str, ...]
    label: Optional[str] = None


Item = Union[Rel, WSpec, IfSpec]


class Namer:
    """Per-variable version counters: ``fresh("x")`` gives ``x#1``, ``x#2``..."""

    def __init__(self, counters: Optional[dict[str, int]] = None):
        self.counters = dict(counters or {})

    def __call__(self, base: str) -> str:
        n = self.counters.get(base, 0) + 1
        self.counters[base] = n
        return f"{base}#{n}"


class SSABuilder:
    def __init__(self, fresh: Callable[[str], str]):
        self.fresh = fresh

    def block(self, stmts: tuple[Stmt, ...], state: dict[str, str]) -> tuple[list[Item], dict[str, str]]:
        items: list[Item] = []
        state = dict(state)
        for s in stmts:
            state = self.stmt(s, state, items)
        return items, state

    def stmt(self, s: Stmt, state: dict[str, str], items: list[Item]) -> dict[str, str]:
        if isinstance(s, Skip):
            return state
        if isinstance(s, Assign):
            value = rename(s.value, state)
            new = self.fresh(s.var)
            items.append(Rel("=", Var(new), value))
            state = dict(state)
            state[s.var] = new
            return state
        if isinstance(s, If):
            cond = rename(s.cond, state)
            then_items, st_t = self.block(s.then, state)
            else_items, st_e = self.block(s.orelse, state)
            out = dict(state)
            merges: list[str] = []
            for v in sorted(set(st_t) & set(st_e)):
                if st_t[v] == st_e[v]:
                    out[v] = st_t[v]
                    continue
                m = self.fresh(v)
                then_items.append(Rel("=", Var(m), Var(st_t[v])))
                else_items.append(Rel("=", Var(m), Var(st_e[v])))
                merges.append(m)
                out[v] = m
            for v in set(out) - (set(st_t) & set(st_e)):
                del out[v]
            if then_items or else_items:
                items.append(IfSpec(cond, tuple(then_items), tuple(else_items), tuple(merges), s.label))
            return out
        if isinstance(s, While):
            return self.loop(s, state, items)
        raise TypeError(f"unknown statement {s!r}")

    def loop(self, s: While, state: dict[str, str], items: list[Item]) -> dict[str, str]:
        touched = [v for v in used((s,)) if v in state]
        written = [v for v in assigned(s.body) if v in state]
        m1 = tuple((v, state[v]) for v in touched)
        m3 = tuple((v, self.fresh(v)) for v in written)
        items.append(WSpec(m1, m3, s.cond, s.body, s.label))
        out = dict(state)
        out.update(dict(m3))
        return out


class UnsupportedTarget(ValueError):
    pass


@dataclass
class SSASystem:
    """Everything needed to post a reachability query into a store."""

    items: list[Item]
    path: list[Rel]
    params: dict[str, str]
    bounds: dict[str, tuple[int, int]]
    state: dict[str, str]
    namer: Namer
    wspecs: list[WSpec] = field(default_factory=list)

    def constraints(self) -> list[Rel]:
        return [i for i in self.items if isinstance(i, Rel)] + list(self.path)


def to_ssa_constraints(p: Program, target: str) -> SSASystem:
    """Constraints whose solutions are the inputs reaching ``target``.

    Statements after the target are irrelevant and not translated.  Branch
    conditions of the ``if`` statements enclosing the target go to ``path``.
    """
    if p.find(target) is None:
        raise KeyError(f"unknown target label {target!r}")
    namer = Namer()
    builder = SSABuilder(namer)
    state = {prm.name: namer(prm.name) for prm in p.params}
    params = dict(state)
    bounds = {state[prm.name]: (prm.lo, prm.hi) for prm in p.params}
    items: list[Item] = []
    path: list[Rel] = []

    def contains(stmts: tuple[Stmt, ...]) -> bool:
        return any(s.label == target for s in walk(stmts))

    def descend(stmts: tuple[Stmt, ...], st: dict[str, str]) -> dict[str, str]:
        for s in stmts:
            if s.label == target:
                return st
            if isinstance(s, If) and contains(s.then + s.orelse):
                cond = rename(s.cond, st)
                if contains(s.then):
                    path.append(cond)
                    return descend(s.then, st)
                path.append(negate(cond))
                return descend(s.orelse, st)
            if isinstance(s, While) and contains(s.body):
                raise UnsupportedTarget(
                    f"target {target!r} lies inside the loop body; only targets outside loops are supported")
            st = builder.stmt(s, st, items)
        raise AssertionError("target not found")

    final = descend(p.body, state)
    wspecs = [i for i in _flatten(items) if isinstance(i, WSpec)]
    return SSASystem(items, path, params, bounds, final, namer, wspecs)


def _flatten(items):
    for i in items:
        yield i
        if isinstance(i, IfSpec):
            yield from _flatten(i.then)
            yield from _flatten(i.orelse)
