"""Concrete and non-relational abstract domains.

``TupleSet`` is the concrete lattice (sets of valuations), ``ArcElement``
keeps one finite set per variable and ``Box`` keeps one integer interval
per variable.  The maps between them form the usual abstraction ladder::

    TupleSet --alpha_arc--> ArcElement --alpha_inter--> Box

Infinite interval ends are the floats ``-inf``/``inf``; every finite end is
a Python ``int``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

INF = math.inf
TUPLE_CAP = 10**6


class OracleCapExceeded(RuntimeError):
    """Raised instead of silently truncating an enumeration."""


@dataclass(frozen=True)
class TupleSet:
    vars: tuple[str, ...]
    tuples: frozenset[tuple[int, ...]]

    def __post_init__(self) -> None:
        n = len(self.vars)
        for t in self.tuples:
            if len(t) != n:
                raise ValueError(f"tuple {t} does not have arity {n}")

    @staticmethod
    def of(vars: Sequence[str], tuples: Iterable[Sequence[int]]) -> "TupleSet":
        return TupleSet(tuple(vars), frozenset(tuple(t) for t in tuples))

    @staticmethod
    def product(vars: Sequence[str], domains: Sequence[Iterable[int]],
                cap: int = TUPLE_CAP) -> "TupleSet":
        doms = [sorted(set(d)) for d in domains]
        size = math.prod(len(d) for d in doms)
        if size > cap:
            raise OracleCapExceeded(f"{size} tuples exceed the cap of {cap}")
        return TupleSet(tuple(vars), frozenset(itertools.product(*doms)))

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(sorted(self.tuples))

    def __contains__(self, t: object) -> bool:
        return t in self.tuples

    def valuations(self) -> Iterator[dict[str, int]]:
        for t in self:
            yield dict(zip(self.vars, t))

    def filter(self, pred: Callable[[dict[str, int]], bool]) -> "TupleSet":
        keep = [t for t in self.tuples if pred(dict(zip(self.vars, t)))]
        return TupleSet(self.vars, frozenset(keep))

    def project(self, vars: Sequence[str]) -> "TupleSet":
        idx = [self.vars.index(v) for v in vars]
        return TupleSet(tuple(vars), frozenset(tuple(t[i] for i in idx) for t in self.tuples))


@dataclass(frozen=True)
class ArcElement:
    """One sorted, duplicate-free tuple of integers per variable."""

    vars: tuple[str, ...]
    sets: tuple[tuple[int, ...], ...]

    @staticmethod
    def of(vars: Sequence[str], sets: Sequence[Iterable[int]]) -> "ArcElement":
        if len(vars) != len(sets):
            raise ValueError("one set per variable is required")
        return ArcElement(tuple(vars), tuple(tuple(sorted(set(s))) for s in sets))

    @staticmethod
    def from_mapping(domains: Mapping[str, Iterable[int]]) -> "ArcElement":
        names = sorted(domains)
        return ArcElement.of(names, [domains[v] for v in names])

    def __getitem__(self, var: str) -> tuple[int, ...]:
        return self.sets[self.vars.index(var)]

    def is_empty(self) -> bool:
        return any(not s for s in self.sets)

    def size(self) -> int:
        return math.prod(len(s) for s in self.sets)

    def as_dict(self) -> dict[str, tuple[int, ...]]:
        return dict(zip(self.vars, self.sets))


class Interval(NamedTuple):
    lo: float
    hi: float


@dataclass(frozen=True)
class Box:
    """Per-variable closed integer intervals; any crossing gives the canonical
    empty box (every interval ``(1, 0)``)."""

    vars: tuple[str, ...]
    intervals: tuple[Interval, ...]

    def __post_init__(self) -> None:
        if len(self.vars) != len(self.intervals):
            raise ValueError("one interval per variable is required")

    @staticmethod
    def of(bounds: Mapping[str, tuple[float, float]] | Iterable[tuple[str, tuple[float, float]]]) -> "Box":
        items = list(bounds.items()) if isinstance(bounds, Mapping) else list(bounds)
        names = tuple(v for v, _ in items)
        ivs = tuple(Interval(_norm(lo, True), _norm(hi, False)) for _, (lo, hi) in items)
        if any(iv.lo > iv.hi for iv in ivs):
            return Box.empty(names)
        return Box(names, ivs)

    @staticmethod
    def empty(vars: Sequence[str]) -> "Box":
        return Box(tuple(vars), tuple(Interval(1, 0) for _ in vars))

    @staticmethod
    def top(vars: Sequence[str]) -> "Box":
        return Box(tuple(vars), tuple(Interval(-INF, INF) for _ in vars))

    def is_empty(self) -> bool:
        return any(iv.lo > iv.hi for iv in self.intervals)

    def __getitem__(self, var: str) -> Interval:
        return self.intervals[self.vars.index(var)]

    def get(self, var: str, default: Interval | None = None) -> Interval | None:
        try:
            return self[var]
        except ValueError:
            return default

    def as_dict(self) -> dict[str, Interval]:
        return dict(zip(self.vars, self.intervals))

    def replace(self, **updates: tuple[float, float]) -> "Box":
        d = self.as_dict()
        for k, v in updates.items():
            d[k] = Interval(*v)
        return Box.of(d)

    def with_bounds(self, updates: Mapping[str, tuple[float, float]]) -> "Box":
        d = self.as_dict()
        d.update(updates)
        return Box.of(d)

    def is_finite(self) -> bool:
        return all(math.isfinite(iv.lo) and math.isfinite(iv.hi) for iv in self.intervals)

    def volume(self) -> float:
        if self.is_empty():
            return 0
        return math.prod(iv.hi - iv.lo + 1 for iv in self.intervals)

    def __str__(self) -> str:
        if self.is_empty():
            return "empty"
        return ", ".join(f"{v} in [{_fmt(iv.lo)}, {_fmt(iv.hi)}]" for v, iv in zip(self.vars, self.intervals))


# BoundElement is the same value type under the name used by the filters.
BoundElement = Box
IntervalBox = Box


def _norm(x: float, lower: bool) -> float:
    if isinstance(x, int) or (isinstance(x, float) and math.isinf(x)):
        return x
    return math.ceil(x) if lower else math.floor(x)


def _fmt(x: float) -> str:
    if x == INF:
        return "+inf"
    if x == -INF:
        return "-inf"
    return str(x)


def alpha_arc(s: TupleSet) -> ArcElement:
    cols = [set() for _ in s.vars]
    for t in s.tuples:
        for i, x in enumerate(t):
            cols[i].add(x)
    return ArcElement.of(s.vars, cols)


def gamma_arc(a: ArcElement, cap: int = TUPLE_CAP) -> TupleSet:
    return TupleSet.product(a.vars, a.sets, cap)


def alpha_inter(a: ArcElement) -> Box:
    if a.is_empty():
        return Box.empty(a.vars)
    return Box(a.vars, tuple(Interval(s[0], s[-1]) for s in a.sets))


def gamma_inter(b: Box) -> ArcElement:
    if b.is_empty():
        return ArcElement(b.vars, tuple(() for _ in b.vars))
    if not b.is_finite():
        raise OracleCapExceeded("cannot enumerate an unbounded interval")
    return ArcElement(b.vars, tuple(tuple(range(iv.lo, iv.hi + 1)) for iv in b.intervals))


def alpha_bound(s: TupleSet) -> Box:
    return alpha_inter(alpha_arc(s))


def gamma_bound(b: Box, cap: int = TUPLE_CAP) -> TupleSet:
    return gamma_arc(gamma_inter(b), cap)


class LatticeOps(NamedTuple):
    leq: Callable
    join: Callable
    meet: Callable


def _check(a, b) -> None:
    if a.vars != b.vars:
        raise ValueError(f"arity mismatch: {a.vars} vs {b.vars}")


def _concrete_ops() -> LatticeOps:
    def leq(a: TupleSet, b: TupleSet) -> bool:
        _check(a, b)
        return a.tuples <= b.tuples

    def join(a: TupleSet, b: TupleSet) -> TupleSet:
        _check(a, b)
        return TupleSet(a.vars, a.tuples | b.tuples)

    def meet(a: TupleSet, b: TupleSet) -> TupleSet:
        _check(a, b)
        return TupleSet(a.vars, a.tuples & b.tuples)

    return LatticeOps(leq, join, meet)


def _arc_ops() -> LatticeOps:
    def leq(a: ArcElement, b: ArcElement) -> bool:
        _check(a, b)
        return all(set(x) <= set(y) for x, y in zip(a.sets, b.sets))

    def join(a: ArcElement, b: ArcElement) -> ArcElement:
        _check(a, b)
        return ArcElement.of(a.vars, [set(x) | set(y) for x, y in zip(a.sets, b.sets)])

    def meet(a: ArcElement, b: ArcElement) -> ArcElement:
        _check(a, b)
        return ArcElement.of(a.vars, [set(x) & set(y) for x, y in zip(a.sets, b.sets)])

    return LatticeOps(leq, join, meet)


def _bound_ops() -> LatticeOps:
    def leq(a: Box, b: Box) -> bool:
        _check(a, b)
        if a.is_empty():
            return True
        if b.is_empty():
            return False
        return all(y.lo <= x.lo and x.hi <= y.hi for x, y in zip(a.intervals, b.intervals))

    def join(a: Box, b: Box) -> Box:
        _check(a, b)
        if a.is_empty():
            return b
        if b.is_empty():
            return a
        return Box(a.vars, tuple(Interval(min(x.lo, y.lo), max(x.hi, y.hi))
                                 for x, y in zip(a.intervals, b.intervals)))

    def meet(a: Box, b: Box) -> Box:
        _check(a, b)
        return Box.of([(v, (max(x.lo, y.lo), min(x.hi, y.hi)))
                       for v, x, y in zip(a.vars, a.intervals, b.intervals)])

    return LatticeOps(leq, join, meet)


def lattice_ops(kind: str) -> LatticeOps:
    """Inclusion, join and meet for ``concrete``, ``arc`` or ``bound``."""
    if kind == "concrete":
        return _concrete_ops()
    if kind == "arc":
        return _arc_ops()
    if kind == "bound":
        return _bound_ops()
    raise ValueError(f"unknown lattice kind {kind!r}")
