"""Dynamic linear relaxations of integer constraints.

A relaxation is computed from the *current* bounds, so re-running it after
the box shrinks gives a tighter polyhedron.  Three strategies:

``drop``
    nonlinear constraints relax to ``True``.
``envelope``
    each product term ``x*y`` gets the four McCormick facets obtained by
    expanding ``(x - lx)(y - ly) >= 0`` and its three siblings.  When the
    constraint is an equality with a single product term, the product is
    replaced by the linear part it equals; otherwise a fresh variable named
    after the monomial stands for it.  Higher-degree monomials are chained.
``corner``
    for ``v = x*y`` only: the convex hull of the integer points ``(x, y)``
    whose product lies in the bounds of ``v``.  Other shapes use ``envelope``.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from . import intervals as iv
from .domains import INF, Box
from .expr import Rel, difference, linear_form, linear_from_expr, vars_of
from .linear import GE, LinearConstraint, LinearExpression, ge, le
from .polyhedra import Polyhedron, alpha_box

log = logging.getLogger(__name__)

DROP = "drop"
ENVELOPE = "envelope"
CORNER = "corner"
STRATEGIES = (DROP, ENVELOPE, CORNER)
CORNER_MAX_WIDTH = 10_000


def product_name(monomial: Sequence[str]) -> str:
    return "*".join(monomial)


def _bounds(box: dict, var: str) -> tuple:
    return box.get(var, (-INF, INF))


def mccormick(w: LinearExpression, x: LinearExpression, y: LinearExpression,
              bx: tuple, by: tuple) -> list[LinearConstraint]:
    """The four facets of ``w = x*y`` over ``bx`` x ``by`` (finite bounds)."""
    (lx, ux), (ly, uy) = bx, by
    return [
        LinearConstraint.make(w - x * ly - y * lx + lx * ly),   # (x-lx)(y-ly) >= 0
        LinearConstraint.make(w - x * uy - y * ux + ux * uy),   # (ux-x)(uy-y) >= 0
        LinearConstraint.make(x * uy + y * lx - lx * uy - w),   # (x-lx)(uy-y) >= 0
        LinearConstraint.make(x * ly + y * ux - ux * ly - w),   # (ux-x)(y-ly) >= 0
    ]


def _finite(b: tuple) -> bool:
    return math.isfinite(b[0]) and math.isfinite(b[1])


class _Products:
    """Allocates (deterministically named) product variables and their facets."""

    def __init__(self, box: dict):
        self.box = dict(box)
        self.facets: list[LinearConstraint] = []
        self.fresh: dict[str, tuple] = {}

    def var_for(self, monomial: tuple[str, ...]) -> Optional[str]:
        """Name of a variable equal to the monomial, with facets recorded;
        ``None`` when some factor is unbounded."""
        if len(monomial) == 1:
            return monomial[0]
        name = product_name(monomial)
        if name in self.fresh:
            return name
        left = self.var_for(monomial[:-1])
        if left is None:
            return None
        right = monomial[-1]
        bl, br = _bounds(self.box, left), _bounds(self.box, right)
        if not (_finite(bl) and _finite(br)):
            return None
        bw = iv.imul(bl, br)
        self.fresh[name] = bw
        self.box[name] = bw
        W, L, R = (LinearExpression.var(n) for n in (name, left, right))
        self.facets.extend(mccormick(W, L, R, bl, br))
        self.facets.extend([ge(W, bw[0]), le(W, bw[1])])
        return name


def relax(c: Rel, b: Box, strategy: str = ENVELOPE) -> list[LinearConstraint]:
    """Sound linear constraints for the integer solutions of ``c`` in ``b``.

    May mention fresh product variables (named ``x*y``); their bounds are
    included among the returned constraints.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown relaxation strategy {strategy!r}")
    if b.is_empty():
        return []
    if c.op == "!=":
        return []
    lf = linear_form(c)
    if lf is not None:
        return [] if lf.is_trivial() else [lf]
    if strategy == DROP:
        return []
    box = {v: (i.lo, i.hi) for v, i in zip(b.vars, b.intervals)}
    if strategy == CORNER:
        out = _corner(c, box)
        if out is not None:
            return out
    return _envelope(c, box)


def _envelope(c: Rel, box: dict) -> list[LinearConstraint]:
    poly = difference(c)
    linear = {m: k for m, k in poly.items() if len(m) <= 1}
    nonlinear = {m: k for m, k in poly.items() if len(m) > 1}
    lin = LinearExpression.build({m[0]: k for m, k in linear.items() if m}, linear.get((), 0))
    products = _Products(box)
    if c.op == "=" and len(nonlinear) == 1:
        (m, k), = nonlinear.items()
        # lin + k*m = 0, so the product equals -lin/k: no fresh variable
        # for the top-level product.
        if len(m) == 2:
            bx, by = _bounds(box, m[0]), _bounds(box, m[1])
            if not (_finite(bx) and _finite(by)):
                return []
            X, Y = LinearExpression.var(m[0]), LinearExpression.var(m[1])
            return mccormick(lin * Fraction(-1, k), X, Y, bx, by)
        left = products.var_for(m[:-1])
        if left is None:
            return []
        bl, br = _bounds(products.box, left), _bounds(box, m[-1])
        if not (_finite(bl) and _finite(br)):
            return []
        X, Y = LinearExpression.var(left), LinearExpression.var(m[-1])
        return products.facets + mccormick(lin * Fraction(-1, k), X, Y, bl, br)
    total = lin
    for m, k in nonlinear.items():
        w = products.var_for(m)
        if w is None:
            return []
        total = total + LinearExpression.var(w, k)
    return products.facets + [linear_from_expr(total, c.op)]


def _corner(c: Rel, box: dict) -> Optional[list[LinearConstraint]]:
    """Integer hull facets for ``v = x*y`` in ``(x, y)``; ``None`` if the
    shape does not apply."""
    if c.op != "=":
        return None
    poly = difference(c)
    nonlinear = [m for m in poly if len(m) > 1]
    linear = [m for m in poly if len(m) == 1]
    if len(nonlinear) != 1 or len(nonlinear[0]) != 2 or len(linear) != 1 or () in poly:
        return None
    m = nonlinear[0]
    x, y = m
    v = linear[0][0]
    if x == y or v in m or abs(poly[m]) != 1 or poly[linear[0]] != -poly[m]:
        return None
    bx, by, bv = _bounds(box, x), _bounds(box, y), _bounds(box, v)
    if not (_finite(bx) and _finite(by) and _finite(bv)):
        return None
    if bx[1] - bx[0] > CORNER_MAX_WIDTH:
        return None
    pts: list[tuple[int, int]] = []
    for a in range(bx[0], bx[1] + 1):
        ys = iv.meet(by, iv.idiv_int(bv, (a, a)))
        if iv.is_empty(ys):
            continue
        lo, hi = ys
        # idiv_int is an outward hull; tighten to actual integer supports
        while lo <= hi and not bv[0] <= a * lo <= bv[1]:
            lo += 1
        while hi >= lo and not bv[0] <= a * hi <= bv[1]:
            hi -= 1
        if lo <= hi:
            pts.append((a, lo))
            pts.append((a, hi))
    X, Y = LinearExpression.var(x), LinearExpression.var(y)
    if not pts:
        return [LinearConstraint.make(LinearExpression.const(-1))]
    return _hull_facets(sorted(set(pts)), X, Y)


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull_facets(pts: list[tuple[int, int]], X: LinearExpression,
                 Y: LinearExpression) -> list[LinearConstraint]:
    """Facets (counter-clockwise monotone chain) of the hull of ``pts``."""
    if len(pts) == 1:
        (a, b), = pts
        return [ge(X, a), le(X, a), ge(Y, b), le(Y, b)]
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    ring = lower[:-1] + upper[:-1]
    if len(ring) == 2:
        # segment: its supporting line plus the two end caps
        (a0, b0), (a1, b1) = ring
        dx, dy = a1 - a0, b1 - b0
        line = LinearConstraint.make(X * dy - Y * dx - (a0 * dy - b0 * dx), "=")
        along = X * dx + Y * dy
        return [line, ge(along, a0 * dx + b0 * dy), le(along, a1 * dx + b1 * dy)]
    out = []
    n = len(ring)
    for k in range(n):
        (a0, b0), (a1, b1) = ring[k], ring[(k + 1) % n]
        # interior lies to the left of each counter-clockwise edge
        e = (X - a0) * (-(b1 - b0)) + (Y - b0) * (a1 - a0)
        out.append(LinearConstraint.make(e, GE))
    return out


def relax_system(cs: Iterable[Rel], b: Box, strategy: str = ENVELOPE) -> Polyhedron:
    """``alpha_box(b)`` met with the relaxation of every constraint."""
    base = alpha_box(b)
    if b.is_empty():
        return base
    cons: list[LinearConstraint] = []
    extra: list[str] = []
    for c in cs:
        for lc in relax(c, b, strategy):
            cons.append(lc)
            for v in lc.variables:
                if v not in b.vars and v not in extra:
                    extra.append(v)
    dims = tuple(b.vars) + tuple(extra)
    missing = {v for c in cs for v in vars_of(c)} - set(dims)
    dims = dims + tuple(sorted(missing))
    return Polyhedron.of(dims, list(base.constraints) + cons)
