"""Convex polyhedra over the rationals, constraint representation only.

A :class:`Polyhedron` is a set of :class:`LinearConstraint` over an ordered
tuple of dimension names.  No generator form is ever built; every query is
answered by the exact simplex of :mod:`cbr.simplex`.

Two joins are provided:

* :func:`join` (the default used by the loop analysis) is a template join:
  every facet direction of either operand is relaxed just enough to cover
  both, and the affine hull of the union is added.
* :func:`hull` is the exact closed convex hull, computed by lifting and
  Fourier-Motzkin projection for up to ``D_EXACT`` dimensions, as long as
  the projection stays under ``HULL_LIMIT`` inequalities.  Otherwise it
  returns the template join.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from . import simplex
from .domains import INF, Box, Interval, OracleCapExceeded
from .linear import EQ, FALSE, GE, LinearConstraint, LinearExpression, eq, ge, le

log = logging.getLogger(__name__)

D_EXACT = 6
# intermediate Fourier-Motzkin size at which hull() gives up on exactness
HULL_LIMIT = 400
# project() prunes with LPs once a system outgrows both of these
FM_PRUNE_MIN = 24
FM_PRUNE_FACTOR = 2


@dataclass(frozen=True)
class Polyhedron:
    dims: tuple[str, ...]
    constraints: frozenset[LinearConstraint]

    # -- construction ---------------------------------------------------

    @staticmethod
    def of(dims: Sequence[str], constraints: Iterable[LinearConstraint] = ()) -> "Polyhedron":
        cons = set()
        for c in constraints:
            if c.is_trivial():
                continue
            if c.is_contradiction():
                return Polyhedron.empty(dims)
            extra = set(c.variables) - set(dims)
            if extra:
                raise ValueError(f"constraint {c} mentions unknown dims {sorted(extra)}")
            cons.add(c)
        return Polyhedron(tuple(dims), frozenset(cons))

    @staticmethod
    def universe(dims: Sequence[str]) -> "Polyhedron":
        return Polyhedron(tuple(dims), frozenset())

    @staticmethod
    def empty(dims: Sequence[str]) -> "Polyhedron":
        return Polyhedron(tuple(dims), frozenset([FALSE]))

    # -- basic queries --------------------------------------------------

    def is_canonical_empty(self) -> bool:
        return self.constraints == frozenset([FALSE])

    def is_empty(self) -> bool:
        if self.is_canonical_empty():
            return True
        if not self.constraints:
            return False
        return simplex.feasible_point(self.constraints) is None

    def optimize(self, objective: LinearExpression, sense: str = "max") -> simplex.LPResult:
        return simplex.optimize(self.constraints, objective, sense)

    def bounds(self, var: str) -> tuple[Fraction | float, Fraction | float]:
        """Rational ``(min, max)`` of ``var``; ``(inf, -inf)`` when empty."""
        e = LinearExpression.var(var)
        hi = self.optimize(e, "max")
        if hi.status == simplex.INFEASIBLE:
            return INF, -INF
        lo = self.optimize(e, "min")
        return (lo.value if lo.optimal else -INF), (hi.value if hi.optimal else INF)

    def entails(self, c: LinearConstraint) -> bool:
        """Every rational point of ``self`` satisfies ``c``."""
        if c.is_trivial():
            return True
        return all(_entails_ge(self.constraints, part) for part in c.as_inequalities())

    def contains_point(self, point: Mapping[str, int | Fraction]) -> bool:
        return all(c.satisfied_by(point) for c in self.constraints)

    # -- structural -----------------------------------------------------

    def add(self, constraints: Iterable[LinearConstraint]) -> "Polyhedron":
        return Polyhedron.of(self.dims, itertools.chain(self.constraints, constraints))

    def extend(self, dims: Sequence[str]) -> "Polyhedron":
        new = tuple(self.dims) + tuple(d for d in dims if d not in self.dims)
        return Polyhedron(new, self.constraints)

    def rename(self, mapping: Mapping[str, str]) -> "Polyhedron":
        dims = tuple(mapping.get(d, d) for d in self.dims)
        if len(set(dims)) != len(dims):
            raise ValueError("renaming merges dimensions")
        return Polyhedron.of(dims, (c.rename(mapping) for c in self.constraints))

    def with_dims(self, dims: Sequence[str]) -> "Polyhedron":
        """Same constraints over another dim tuple (must cover them)."""
        return Polyhedron.of(dims, self.constraints)

    def dump(self) -> str:
        if self.is_canonical_empty():
            return "-1 >= 0"
        return "\n".join(sorted(str(c) for c in self.constraints)) or "true"

    def __str__(self) -> str:
        if self.is_canonical_empty():
            return "{false}"
        return "{" + ", ".join(sorted(str(c) for c in self.constraints)) + "}"


def _entails_ge(constraints: frozenset[LinearConstraint], c: LinearConstraint) -> bool:
    if c in constraints:
        return True
    res = simplex.minimize(constraints, c.expression)
    if res.status == simplex.INFEASIBLE:
        return True
    return res.optimal and res.value >= 0


# -- lattice operations -------------------------------------------------

def intersect(p: Polyhedron, q: Polyhedron) -> Polyhedron:
    if p.dims != q.dims:
        raise ValueError("intersect needs identical dims")
    return Polyhedron.of(p.dims, p.constraints | q.constraints)


def includes(p: Polyhedron, q: Polyhedron) -> bool:
    """``q`` is contained in ``p``."""
    if p.dims != q.dims and set(p.dims) != set(q.dims):
        raise ValueError("includes needs identical dims")
    if q.is_empty():
        return True
    if p.is_canonical_empty():
        return False
    return all(q.entails(c) for c in p.constraints)


def equivalent(p: Polyhedron, q: Polyhedron) -> bool:
    return includes(p, q) and includes(q, p)


def reduce(p: Polyhedron) -> Polyhedron:
    """Equivalent polyhedron with equalities in echelon form, substituted
    into the inequalities, and no redundant inequality."""
    if p.is_empty():
        return Polyhedron.empty(p.dims)
    order = {d: k for k, d in enumerate(p.dims)}
    eqs, ineqs = _split(p.constraints)
    eqs, ineqs = _implicit_equalities(eqs, ineqs)
    solved, ineqs = _eliminate_equalities(eqs, ineqs, order)
    if solved is None:
        return Polyhedron.empty(p.dims)
    ineqs = _remove_redundant(ineqs)
    cons = [eq(LinearExpression.var(v), e) for v, e in solved] + ineqs
    return Polyhedron.of(p.dims, cons)


def _split(cons: Iterable[LinearConstraint]) -> tuple[list[LinearConstraint], list[LinearConstraint]]:
    eqs = [c for c in cons if c.relation == EQ]
    ineqs = [c for c in cons if c.relation == GE]
    return eqs, ineqs


def _implicit_equalities(eqs: list[LinearConstraint], ineqs: list[LinearConstraint]):
    """Promote inequalities that are tight everywhere to equalities."""
    if not ineqs:
        return eqs, ineqs
    # Opposite pairs first: cheap and very common.
    by_lin: dict = {}
    for c in ineqs:
        by_lin.setdefault(c.expression.linear_part(), []).append(c)
    promoted = set()
    new_eqs = list(eqs)
    for lin, cs in by_lin.items():
        neg = by_lin.get(-lin)
        if not neg:
            continue
        for c in cs:
            for d in neg:
                if c.expression.constant + d.expression.constant == 0 and c not in promoted:
                    promoted.update((c, d))
                    new_eqs.append(LinearConstraint.make(c.expression, EQ))
    rest = [c for c in ineqs if c not in promoted]
    if not rest:
        return new_eqs, rest
    # One LP tells whether every remaining inequality can be strict at once.
    t = "__slack_t"
    T = LinearExpression.var(t)
    aux = [LinearConstraint.make(c.expression - T) for c in rest] + [le(T, 1)]
    res = simplex.maximize(new_eqs + aux, T)
    if res.optimal and res.value > 0:
        return new_eqs, rest
    base = new_eqs + rest
    keep = []
    for c in rest:
        hi = simplex.maximize(base, c.expression)
        if hi.optimal and hi.value == 0:
            new_eqs.append(LinearConstraint.make(c.expression, EQ))
        else:
            keep.append(c)
    return new_eqs, keep


def _eliminate_equalities(eqs, ineqs, order):
    """Gauss-Jordan on the equalities, pivoting on the latest dimension.

    Returns ``(solved, ineqs)`` where ``solved`` lists ``(var, expr)`` with
    ``var = expr`` and no solved var occurring in any expr or inequality, or
    ``(None, None)`` on contradiction.
    """
    solved: list[tuple[str, LinearExpression]] = []
    pending = [c.expression for c in eqs]
    while pending:
        e = pending.pop()
        for v, rhs in solved:
            e = e.substitute(v, rhs)
        if e.is_constant():
            if e.constant != 0:
                return None, None
            continue
        pivot = max(e.variables, key=lambda v: order.get(v, -1))
        a = e.coeff(pivot)
        rhs = (e - LinearExpression.var(pivot, a)) * (-1 / a)
        solved = [(v, x.substitute(pivot, rhs)) for v, x in solved]
        solved.append((pivot, rhs))
    out = []
    for c in ineqs:
        e = c.expression
        for v, rhs in solved:
            e = e.substitute(v, rhs)
        d = LinearConstraint.make(e, GE)
        if d.is_contradiction():
            return None, None
        if not d.is_trivial():
            out.append(d)
    return solved, out


def _weight(c: LinearConstraint) -> tuple:
    terms = c.expression.terms
    return len(terms), sum(abs(a) for _, a in terms), LinearConstraint.sort_key(c)


def _remove_redundant(ineqs: list[LinearConstraint],
                      context: Sequence[LinearConstraint] = ()) -> list[LinearConstraint]:
    """Drop inequalities entailed by the others (plus ``context``)."""
    # Syntactic pass: same linear part keeps the tightest constant.
    best: dict = {}
    for c in ineqs:
        lin = c.expression.linear_part()
        cur = best.get(lin)
        if cur is None or c.expression.constant < cur.expression.constant:
            best[lin] = c
    keep = sorted(best.values(), key=LinearConstraint.sort_key)
    if len(keep) <= 1 and not context:
        return keep
    if len(keep) > FM_PRUNE_MIN:
        # Grow a core from the simplest constraints first, so most LPs are
        # small; what the core entails is entailed by the final system too.
        core: list[LinearConstraint] = []
        for c in sorted(keep, key=_weight):
            if not simplex.farkas_entails(list(context) + core, c):
                core.append(c)
        keep = sorted(core, key=LinearConstraint.sort_key)
    for c in list(keep):
        others = [d for d in keep if d is not c]
        if simplex.farkas_entails(list(context) + others, c):
            keep = others
    return keep


def _directions(p: Polyhedron) -> list[LinearExpression]:
    out = []
    for c in p.constraints:
        lin = c.expression.linear_part()
        out.append(lin)
        if c.relation == EQ:
            out.append(-lin)
    return out


def affine_hull(p: Polyhedron) -> Optional[tuple[dict, list[list[Fraction]]]]:
    """``(point, basis)`` with the hull ``point + span(basis)``; ``None`` if empty.

    Basis vectors are lists indexed like ``p.dims``.
    """
    r = reduce(p)
    if r.is_canonical_empty():
        return None
    eqs = [c for c in r.constraints if c.relation == EQ]
    point = simplex.feasible_point(r.constraints) or {}
    point = {d: Fraction(point.get(d, 0)) for d in p.dims}
    rows = [[c.expression.coeff(d) for d in p.dims] for c in eqs]
    return point, _nullspace(rows, len(p.dims))


def _rref(rows: list[list[Fraction]], n: int) -> tuple[list[list[Fraction]], list[int]]:
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for col in range(n):
        pr = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = 1 / m[r][col]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def _nullspace(rows: list[list[Fraction]], n: int) -> list[list[Fraction]]:
    if not rows:
        return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    m, pivots = _rref(rows, n)
    free = [j for j in range(n) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, pc in zip(m, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def affine_hull_equalities(p: Polyhedron, q: Polyhedron) -> list[LinearConstraint]:
    """Equalities describing the affine hull of ``p`` union ``q``."""
    hp, hq = affine_hull(p), affine_hull(q)
    if hp is None and hq is None:
        return []
    if hp is None or hq is None:
        point, basis = hp or hq
    else:
        point, basis = hp
        qpoint, qbasis = hq
        basis = basis + qbasis + [[qpoint[d] - point[d] for d in p.dims]]
    n = len(p.dims)
    normals = _nullspace(basis, n) if basis else [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    out = []
    for nv in normals:
        lin = LinearExpression.build(zip(p.dims, nv))
        c0 = lin.evaluate(point)
        out.append(LinearConstraint.make(lin - c0, EQ))
    return out


def join(p: Polyhedron, q: Polyhedron) -> Polyhedron:
    """Template join: sound, contains both operands, not always the hull.

    For each facet direction ``a`` of either (reduced) operand the result
    keeps ``a.x >= min(min_p a.x, min_q a.x)`` when that minimum is finite;
    the equalities of the affine hull of the union are added on top.
    """
    if p.dims != q.dims:
        raise ValueError("join needs identical dims")
    if p.is_empty():
        return reduce(q)
    if q.is_empty():
        return reduce(p)
    rp, rq = reduce(p), reduce(q)
    cons: list[LinearConstraint] = affine_hull_equalities(rp, rq)
    seen = set()
    for lin in _directions(rp) + _directions(rq):
        if lin in seen or lin.is_constant():
            continue
        seen.add(lin)
        a = simplex.minimize(rp.constraints, lin)
        b = simplex.minimize(rq.constraints, lin)
        if not (a.optimal and b.optimal):
            continue
        m = min(a.value, b.value)
        cons.append(LinearConstraint.make(lin - m, GE))
    return reduce(Polyhedron.of(p.dims, cons))


def hull(p: Polyhedron, q: Polyhedron, d_exact: int = D_EXACT) -> Polyhedron:
    """Closed convex hull of ``p`` union ``q``; the template join when the
    exact computation is out of reach (see the module docstring)."""
    if p.dims != q.dims:
        raise ValueError("hull needs identical dims")
    if p.is_empty():
        return reduce(q)
    if q.is_empty():
        return reduce(p)
    if len(p.dims) > d_exact:
        return join(p, q)
    rp, rq = reduce(p), reduce(q)
    # x = y + z with y in lam*P and z in (1-lam)*Q; substitute y = x - z.
    lam = "__lam"
    zs = {d: f"__z_{d}" for d in p.dims}
    L = LinearExpression.var(lam)
    lifted: list[LinearConstraint] = [ge(L, 0), le(L, 1)]
    for c in rp.constraints:
        e = c.expression
        lin = LinearExpression.build(
            itertools.chain(e.terms, ((zs[v], -a) for v, a in e.terms)))
        lifted.append(LinearConstraint.make(lin + L * e.constant, c.relation))
    for c in rq.constraints:
        e = c.expression
        lin = LinearExpression.build((zs[v], a) for v, a in e.terms)
        lifted.append(LinearConstraint.make(lin + (1 - L) * e.constant, c.relation))
    dims = tuple(p.dims) + tuple(zs.values()) + (lam,)
    lp = Polyhedron.of(dims, lifted)
    try:
        # no pruning here: an exploding lift should hit the limit quickly
        out = project(lp, list(zs.values()) + [lam], limit=HULL_LIMIT, prune=False)
    except ProjectionTooLarge as exc:
        log.debug("hull falls back to the template join: %s", exc)
        return join(p, q)
    return out.with_dims(p.dims)


class ProjectionTooLarge(RuntimeError):
    """Fourier-Motzkin exceeded its inequality limit."""


def project(p: Polyhedron, eliminate: Sequence[str], limit: Optional[int] = None,
            prune: bool = True) -> Polyhedron:
    """Existentially quantify ``eliminate``.

    Fourier-Motzkin, after substituting equalities away.  Kohler's rule
    discards combinations early; with ``prune`` the system is also cleaned
    by LPs whenever it grows past ``FM_PRUNE_*``.  Raises
    :class:`ProjectionTooLarge` if ``limit`` is given and an intermediate
    system has more inequalities.
    """
    keep = tuple(d for d in p.dims if d not in eliminate)
    if p.is_empty():
        return Polyhedron.empty(keep)
    eqs, ineqs = _split(p.constraints)
    todo = [v for v in eliminate if v in p.dims]
    exprs = [c.expression for c in eqs]
    while True:
        idx = next((k for k, e in enumerate(exprs) if any(v in todo for v in e.variables)), None)
        if idx is None:
            break
        e = exprs.pop(idx)
        v = next(v for v in todo if e.coeff(v) != 0)
        a = e.coeff(v)
        rhs = (e - LinearExpression.var(v, a)) * (-1 / a)
        exprs = [x.substitute(v, rhs) for x in exprs]
        ineqs = [c.substitute(v, rhs) for c in ineqs]
        todo.remove(v)
    eq_cons = [LinearConstraint.make(e, EQ) for e in exprs]
    if any(c.is_contradiction() for c in eq_cons + ineqs):
        return Polyhedron.empty(keep)
    for v in list(todo):
        if not any(v in c.variables for c in ineqs):
            todo.remove(v)
    # Kohler's rule: after k eliminations, a combination of more than k + 1
    # original inequalities is redundant.
    hist = {c: frozenset([k]) for k, c in enumerate(ineqs)}
    ineqs = list(hist)
    start, done = len(ineqs), 0
    while todo:
        # cheapest variable first
        def cost(v: str) -> int:
            pos = sum(1 for c in ineqs if c.expression.coeff(v) > 0)
            neg = sum(1 for c in ineqs if c.expression.coeff(v) < 0)
            return pos * neg - pos - neg
        v = min(todo, key=cost)
        todo.remove(v)
        done += 1
        pos = [c for c in ineqs if c.expression.coeff(v) > 0]
        neg = [c for c in ineqs if c.expression.coeff(v) < 0]
        nxt = {c: hist[c] for c in ineqs if c.expression.coeff(v) == 0}
        for cp in pos:
            for cn in neg:
                h = hist[cp] | hist[cn]
                if len(h) > done + 1:
                    continue
                a, b = cp.expression.coeff(v), -cn.expression.coeff(v)
                d = LinearConstraint.make(cp.expression * b + cn.expression * a, GE)
                if d.is_contradiction():
                    return Polyhedron.empty(keep)
                if not d.is_trivial() and (d not in nxt or len(h) < len(nxt[d])):
                    nxt[d] = h
        ineqs, hist = list(nxt), nxt
        if limit is not None and len(ineqs) > limit:
            raise ProjectionTooLarge(f"{len(ineqs)} inequalities after {done} eliminations")
        if prune and len(ineqs) > max(FM_PRUNE_MIN, FM_PRUNE_FACTOR * start):
            # LP pruning, then fresh histories: Kohler's rule only holds
            # relative to the system the counting started from.
            ineqs = _remove_redundant(ineqs, eq_cons)
            hist = {c: frozenset([k]) for k, c in enumerate(ineqs)}
            start, done = len(ineqs), 0
    # Dropping a Farkas-entailed inequality is safe even on an empty set,
    # and it shrinks the primal LPs run by reduce().
    ineqs = _remove_redundant(ineqs, eq_cons)
    return reduce(Polyhedron.of(keep, eq_cons + ineqs))


def widen(p: Polyhedron, q: Polyhedron) -> Polyhedron:
    """Keep the constraints of (reduced) ``p`` that ``q`` entails."""
    if p.dims != q.dims:
        raise ValueError("widen needs identical dims")
    if p.is_empty():
        return reduce(q)
    rp = reduce(p)
    kept = []
    for c in rp.constraints:
        for part in c.as_inequalities():
            if q.entails(part):
                kept.append(part)
    return reduce(Polyhedron.of(p.dims, kept))


# -- box connection -------------------------------------------------------

def alpha_box(b: Box) -> Polyhedron:
    if b.is_empty():
        return Polyhedron.empty(b.vars)
    cons = []
    for v, iv in zip(b.vars, b.intervals):
        x = LinearExpression.var(v)
        if iv.lo != -INF:
            cons.append(ge(x, iv.lo))
        if iv.hi != INF:
            cons.append(le(x, iv.hi))
    return Polyhedron.of(b.vars, cons)


def gamma_box(p: Polyhedron, vars: Optional[Sequence[str]] = None) -> Box:
    """``[ceil(min), floor(max)]`` per dimension; empty on any crossing."""
    names = tuple(vars) if vars is not None else p.dims
    if p.is_empty():
        return Box.empty(names)
    out = []
    for v in names:
        lo, hi = p.bounds(v)
        ilo = -INF if lo == -INF else math.ceil(lo)
        ihi = INF if hi == INF else math.floor(hi)
        if ilo > ihi:
            return Box.empty(names)
        out.append(Interval(ilo, ihi))
    return Box(names, tuple(out))


def integer_points(p: Polyhedron, budget: int = 10**6) -> set[tuple[int, ...]]:
    """All integer tuples of ``p`` by enumerating its bounding box (oracle)."""
    b = gamma_box(p)
    if b.is_empty():
        return set()
    if not b.is_finite():
        raise OracleCapExceeded("polyhedron is unbounded")
    if b.volume() > budget:
        raise OracleCapExceeded(f"box volume {b.volume()} exceeds budget {budget}")
    ranges = [range(iv.lo, iv.hi + 1) for iv in b.intervals]
    out = set()
    for t in itertools.product(*ranges):
        if p.contains_point(dict(zip(p.dims, t))):
            out.add(t)
    return out
