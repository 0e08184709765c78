"""Exact two-phase primal simplex with Bland's rule.

The tableau is fraction free: every row holds Python integers and the value
of its basic variable is ``rhs / coef``.  After each pivot a row is divided
by the gcd of its entries, which keeps numbers small without ever leaving
the integers.  This is an order of magnitude faster than a tableau of
:class:`~fractions.Fraction` cells and just as exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional

from .linear import EQ, LinearConstraint, LinearExpression

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LPResult:
    status: str
    value: Optional[Fraction] = None
    point: Optional[dict] = field(default=None, compare=False, hash=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Counter:
    """Process-wide count of LP solves actually run (cache misses)."""

    calls = 0


def simplex_calls() -> int:
    return _Counter.calls


def _reduce(row: list[int]) -> list[int]:
    g = 0
    for v in row:
        if v:
            g = math.gcd(g, v)
            if g == 1:
                return row
    if g > 1:
        return [v // g for v in row]
    return row


class _Tableau:
    """Rows ``sum row[j] * y_j = row[-1]`` over nonnegative ``y``."""

    def __init__(self, rows: list[list[int]], basis: list[int], ncols: int):
        self.rows = rows
        self.basis = basis
        self.ncols = ncols

    def pivot(self, r: int, j: int, obj: list[int]) -> list[int]:
        prow = self.rows[r]
        if prow[j] < 0:
            prow = [-v for v in prow]
            self.rows[r] = prow
        p = prow[j]
        nz = [k for k, v in enumerate(prow) if v]
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            a = row[j]
            if a:
                new = [v * p for v in row]
                for k in nz:
                    new[k] -= a * prow[k]
                self.rows[i] = _reduce(new)
        a = obj[j]
        if a:
            new = [v * p for v in obj]
            for k in nz:
                new[k] -= a * prow[k]
            # last slot of obj is the scale factor d, untouched by prow
            obj = _reduce(new)
        self.basis[r] = j
        return obj

    def run(self, obj: list[int], allowed: int) -> str:
        """Maximize; ``obj`` is ``[Z_0..Z_{n-1}, rhs, d]`` meaning
        ``d*z + sum Z_j y_j = rhs``.  Columns ``>= allowed`` never enter."""
        n = self.ncols
        while True:
            enter = -1
            for j in range(allowed):
                if obj[j] < 0:
                    enter = j
                    break
            if enter < 0:
                self.obj = obj
                return OPTIMAL
            best = -1
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a == 0:
                    continue
                coef = row[self.basis[i]]
                # normalise so the basic coefficient is positive
                if coef < 0:
                    a, rhs = -a, -row[n]
                else:
                    rhs = row[n]
                if a <= 0:
                    continue
                if best < 0:
                    best, bnum, bden = i, rhs, a
                    continue
                lhs_cmp = rhs * bden - bnum * a
                if lhs_cmp < 0 or (lhs_cmp == 0 and self.basis[i] < self.basis[best]):
                    best, bnum, bden = i, rhs, a
            if best < 0:
                self.obj = obj
                return UNBOUNDED
            obj = self.pivot(best, enter, obj)

    def values(self) -> list[Fraction]:
        n = self.ncols
        out = [Fraction(0)] * n
        for i, row in enumerate(self.rows):
            b = self.basis[i]
            out[b] = Fraction(row[n], row[b])
        return out


def _make_obj(tab: _Tableau, costs: list[int]) -> list[int]:
    """Objective row for maximizing ``costs . y`` w.r.t. the current basis."""
    n = tab.ncols
    obj = [-c for c in costs] + [0, 1]
    for i, row in enumerate(tab.rows):
        b = tab.basis[i]
        a = obj[b]
        if a:
            p = row[b]
            if p < 0:
                row = [-v for v in row]
                p = -p
            new = [v * p for v in obj]
            for k in range(n + 1):
                if row[k]:
                    new[k] -= a * row[k]
            obj = _reduce(new)
    return obj


def _phase_one(rows: list[list[int]], basis: list[int], base: int) -> Optional[_Tableau]:
    """Feasible tableau for ``rows`` (rhs last, all rhs >= 0); rows whose
    ``basis`` entry is -1 get an artificial column.  ``None`` if infeasible."""
    need_art = [r for r, b in enumerate(basis) if b < 0]
    nart = len(need_art)
    ncols = base + nart
    for r in range(len(rows)):
        rhs = rows[r].pop()
        rows[r].extend([0] * nart)
        rows[r].append(rhs)
    for k, r in enumerate(need_art):
        rows[r][base + k] = 1
        basis[r] = base + k
    tab = _Tableau(rows, basis, ncols)
    if not nart:
        return tab
    costs = [0] * base + [-1] * nart
    tab.run(_make_obj(tab, costs), ncols)
    if tab.obj[ncols] != 0:
        return None
    # drive remaining artificials out of the basis
    i = 0
    while i < len(tab.rows):
        b = tab.basis[i]
        if b >= base:
            row = tab.rows[i]
            j = next((j for j in range(base) if row[j]), -1)
            if j < 0:
                del tab.rows[i]
                del tab.basis[i]
                continue
            tab.pivot(i, j, [0] * (ncols + 2))
        i += 1
    for row in tab.rows:
        for k in range(base, ncols):
            row[k] = 0
    return tab


def _solve(constraints: tuple[LinearConstraint, ...], objective: LinearExpression,
           variables: tuple[str, ...]) -> LPResult:
    _Counter.calls += 1
    nv = len(variables)
    index = {v: k for k, v in enumerate(variables)}
    ineqs = [c for c in constraints if c.relation != EQ]
    eqs = [c for c in constraints if c.relation == EQ]
    # columns: x+ (nv), x- (nv), slacks (len ineqs), artificials (added below)
    nslack = len(ineqs)
    base = 2 * nv + nslack
    raw: list[tuple[list[int], int]] = []  # (coefficients over base columns, rhs)
    for k, c in enumerate(ineqs):
        coeffs = [0] * base
        for v, a in c.expression.terms:
            coeffs[index[v]] = int(a)
            coeffs[nv + index[v]] = -int(a)
        coeffs[2 * nv + k] = -1
        raw.append((coeffs, -int(c.expression.constant)))
    for c in eqs:
        coeffs = [0] * base
        for v, a in c.expression.terms:
            coeffs[index[v]] = int(a)
            coeffs[nv + index[v]] = -int(a)
        raw.append((coeffs, -int(c.expression.constant)))

    rows: list[list[int]] = []
    basis: list[int] = []
    for r, (coeffs, rhs) in enumerate(raw):
        if rhs < 0:
            coeffs = [-v for v in coeffs]
            rhs = -rhs
        rows.append(coeffs + [rhs])
        basis.append(2 * nv + r if r < nslack and coeffs[2 * nv + r] == 1 else -1)
    tab = _phase_one(rows, basis, base)
    if tab is None:
        return LPResult(INFEASIBLE)
    ncols = tab.ncols

    costs = [0] * ncols
    for v, a in objective.terms:
        costs[index[v]] = a
        costs[nv + index[v]] = -a
    lcm = 1
    for c in costs:
        if c:
            lcm = lcm * Fraction(c).denominator // math.gcd(lcm, Fraction(c).denominator)
    icosts = [int(Fraction(c) * lcm) for c in costs]
    obj = _make_obj(tab, icosts)
    status = tab.run(obj, base)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    obj = tab.obj
    z = Fraction(obj[ncols], obj[ncols + 1]) / lcm + objective.constant
    vals = tab.values()
    point = {v: vals[k] - vals[nv + k] for v, k in index.items()}
    return LPResult(OPTIMAL, z, point)


@lru_cache(maxsize=100_000)
def _integral(e: LinearExpression) -> tuple[tuple[tuple[str, int], ...], int]:
    """Terms and constant of the smallest positive integral multiple of ``e``."""
    m = 1
    for _, a in e.terms:
        m = math.lcm(m, Fraction(a).denominator)
    m = math.lcm(m, Fraction(e.constant).denominator)
    return tuple((v, int(a * m)) for v, a in e.terms), int(e.constant * m)


def farkas_entails(constraints: Iterable[LinearConstraint], target: LinearConstraint) -> bool:
    """Whether the inequality ``target`` is a nonnegative combination of
    ``constraints`` (equalities with either sign) loosened by a constant.

    On a nonempty polyhedron this is exactly entailment.  The LP is the dual
    one, with a row per variable instead of a row per constraint, which is
    much cheaper when many constraints live in few dimensions.  An empty
    polyhedron may answer ``False`` for an entailed ``target``.
    """
    _Counter.calls += 1
    cols: list[tuple[tuple[tuple[str, int], ...], int]] = []
    for c in constraints:
        terms, const = _integral(c.expression)
        cols.append((terms, const))
        if c.relation == EQ:
            cols.append((tuple((v, -a) for v, a in terms), -const))
    tterms, tconst = _integral(target.expression)
    index: dict[str, int] = {}
    for terms, _ in cols:
        for v, _ in terms:
            index.setdefault(v, len(index))
    for v, _ in tterms:
        index.setdefault(v, len(index))
    n = len(cols)
    rows = [[0] * (n + 1) for _ in index]
    for j, (terms, _) in enumerate(cols):
        for v, a in terms:
            rows[index[v]][j] = a
    for v, a in tterms:
        rows[index[v]][n] = a
    for i, row in enumerate(rows):
        if row[-1] < 0:
            rows[i] = [-a for a in row]
    tab = _phase_one(rows, [-1] * len(rows), n)
    if tab is None:
        return False
    # minimise the constant of the combination: maximise -sum(y_i * b_i)
    costs = [-const for _, const in cols] + [0] * (tab.ncols - n)
    if tab.run(_make_obj(tab, costs), n) == UNBOUNDED:
        return True
    best = -Fraction(tab.obj[tab.ncols], tab.obj[tab.ncols + 1])
    return best <= tconst


@lru_cache(maxsize=200_000)
def _cached(constraints: frozenset, objective: LinearExpression) -> LPResult:
    cons = tuple(sorted(constraints, key=LinearConstraint.sort_key))
    names = set(objective.variables)
    for c in cons:
        names.update(c.variables)
    return _solve(cons, objective, tuple(sorted(names)))


def clear_cache() -> None:
    """Forget memoised LP results (for timing measurements)."""
    _cached.cache_clear()


def maximize(constraints: Iterable[LinearConstraint], objective: LinearExpression) -> LPResult:
    """Maximize ``objective`` over the rational points of ``constraints``."""
    cons = frozenset(c for c in constraints if not c.is_trivial())
    if any(c.is_contradiction() for c in cons):
        return LPResult(INFEASIBLE)
    return _cached(cons, objective)


def minimize(constraints: Iterable[LinearConstraint], objective: LinearExpression) -> LPResult:
    res = maximize(constraints, -objective)
    if res.status != OPTIMAL:
        return res
    return LPResult(OPTIMAL, -res.value, res.point)


def optimize(constraints: Iterable[LinearConstraint], objective: LinearExpression,
             sense: str = "max") -> LPResult:
    if sense == "max":
        return maximize(constraints, objective)
    if sense == "min":
        return minimize(constraints, objective)
    raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")


def feasible_point(constraints: Iterable[LinearConstraint]) -> Optional[dict]:
    res = maximize(constraints, LinearExpression())
    return res.point if res.optimal else None
