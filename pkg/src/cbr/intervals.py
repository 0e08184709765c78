"""Integer interval arithmetic and HC4-style projection of one constraint.

Intervals are ``(lo, hi)`` pairs of ints, with ``-inf``/``inf`` floats for
open ends; ``lo > hi`` means empty.  Quotients are computed exactly with
``Fraction`` and rounded outward to integers.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional

from .domains import INF
from .expr import Const, Neg, Rel, Term, Var

Iv = tuple  # (lo, hi)

EMPTY: Iv = (1, 0)
TOP: Iv = (-INF, INF)


def is_empty(a: Iv) -> bool:
    return a[0] > a[1]


def meet(a: Iv, b: Iv) -> Iv:
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if lo <= hi else EMPTY


def hull(a: Iv, b: Iv) -> Iv:
    if is_empty(a):
        return b
    if is_empty(b):
        return a
    return (min(a[0], b[0]), max(a[1], b[1]))


def iadd(a: Iv, b: Iv) -> Iv:
    if is_empty(a) or is_empty(b):
        return EMPTY
    return (a[0] + b[0], a[1] + b[1])


def ineg(a: Iv) -> Iv:
    if is_empty(a):
        return EMPTY
    return (-a[1], -a[0])


def isub(a: Iv, b: Iv) -> Iv:
    return iadd(a, ineg(b))


def _mul(x, y):
    if x == 0 or y == 0:
        return 0
    return x * y


def imul(a: Iv, b: Iv) -> Iv:
    if is_empty(a) or is_empty(b):
        return EMPTY
    ps = [_mul(x, y) for x in a for y in b]
    return (min(ps), max(ps))


def _quot(t, y):
    """Corner quotient ``t / y`` for ``y != 0``; ``None`` when undefined."""
    if isinstance(y, float):  # y infinite
        if isinstance(t, float):
            return None
        return 0
    if isinstance(t, float):
        return t if y > 0 else -t
    return Fraction(t, y)


def idiv_int(t: Iv, y: Iv) -> Iv:
    """Integers ``x`` such that ``x * v`` lies in ``t`` for some ``v`` in ``y``
    (outward hull)."""
    if is_empty(t) or is_empty(y):
        return EMPTY
    if y == (0, 0):
        return TOP if t[0] <= 0 <= t[1] else EMPTY
    if y[0] <= 0 <= y[1]:
        if t[0] <= 0 <= t[1]:
            return TOP
        parts = []
        if y[0] < 0:
            parts.append(idiv_int(t, (y[0], -1)))
        if y[1] > 0:
            parts.append(idiv_int(t, (1, y[1])))
        out = EMPTY
        for p in parts:
            out = hull(out, p)
        return out
    qs = []
    for a in t:
        for b in y:
            q = _quot(a, b)
            if q is None:
                return TOP
            qs.append(q)
    lo, hi = min(qs), max(qs)
    lo = lo if isinstance(lo, float) else math.ceil(lo)
    hi = hi if isinstance(hi, float) else math.floor(hi)
    return (lo, hi) if lo <= hi else EMPTY


# -- forward / backward evaluation over a constraint tree -------------------

def forward(t: Term, box: dict) -> Iv:
    if isinstance(t, Var):
        return box.get(t.name, TOP)
    if isinstance(t, Const):
        return (t.value, t.value)
    if isinstance(t, Neg):
        return ineg(forward(t.arg, box))
    a, b = forward(t.left, box), forward(t.right, box)
    if t.op == "+":
        return iadd(a, b)
    if t.op == "-":
        return isub(a, b)
    return imul(a, b)


def _backward(t: Term, target: Iv, box: dict) -> bool:
    """Narrow ``box`` so that ``t`` can take a value in ``target``.

    Returns False on emptiness.  Forward values are recomputed on the way
    down, which keeps the code simple at a small cost.
    """
    if is_empty(target):
        return False
    if isinstance(t, Const):
        return target[0] <= t.value <= target[1]
    if isinstance(t, Var):
        cur = box.get(t.name, TOP)
        new = meet(cur, target)
        if is_empty(new):
            return False
        box[t.name] = new
        return True
    if isinstance(t, Neg):
        return _backward(t.arg, ineg(target), box)
    a, b = forward(t.left, box), forward(t.right, box)
    if t.op == "+":
        ta = meet(a, isub(target, b))
        if not _backward(t.left, ta, box):
            return False
        a = forward(t.left, box)
        return _backward(t.right, meet(b, isub(target, a)), box)
    if t.op == "-":
        ta = meet(a, iadd(target, b))
        if not _backward(t.left, ta, box):
            return False
        a = forward(t.left, box)
        return _backward(t.right, meet(b, isub(a, target)), box)
    ta = meet(a, idiv_int(target, b))
    if not _backward(t.left, ta, box):
        return False
    a = forward(t.left, box)
    return _backward(t.right, meet(b, idiv_int(target, a)), box)


def revise(c: Rel, box: dict) -> bool:
    """One HC4 pass of ``c`` over ``box`` (mutated); False on failure."""
    left, right = forward(c.left, box), forward(c.right, box)
    if is_empty(left) or is_empty(right):
        return False
    op = c.op
    if op == "=":
        tl = tr = meet(left, right)
    elif op == "<=":
        tl, tr = (left[0], min(left[1], right[1])), (max(right[0], left[0]), right[1])
    elif op == "<":
        tl, tr = (left[0], min(left[1], right[1] - 1)), (max(right[0], left[0] + 1), right[1])
    elif op == ">=":
        tl, tr = (max(left[0], right[0]), left[1]), (right[0], min(right[1], left[1]))
    elif op == ">":
        tl, tr = (max(left[0], right[0] + 1), left[1]), (right[0], min(right[1], left[1] - 1))
    else:  # !=
        tl, tr = left, right
        if left[0] == left[1]:
            v = left[0]
            if right[0] == right[1] == v:
                return False
            if right[0] == v:
                tr = (v + 1, right[1])
            elif right[1] == v:
                tr = (right[0], v - 1)
        elif right[0] == right[1]:
            v = right[0]
            if left[0] == v:
                tl = (v + 1, left[1])
            elif left[1] == v:
                tl = (left[0], v - 1)
    if is_empty(tl) or is_empty(tr):
        return False
    if tl != left and not _backward(c.left, tl, box):
        return False
    if tr != right and not _backward(c.right, tr, box):
        return False
    return True


def hc4(c: Rel, box: dict, max_iter: int = 50) -> bool:
    """Iterate :func:`revise` to a local fixpoint (bounded)."""
    for _ in range(max_iter):
        before = dict(box)
        if not revise(c, box):
            return False
        if box == before:
            return True
    return True


def entailed_by_box(c: Rel, box: dict) -> Optional[bool]:
    """Decide ``c`` from interval evaluation alone when possible."""
    left, right = forward(c.left, box), forward(c.right, box)
    d = isub(left, right)
    lo, hi = d
    op = c.op
    if op == "<":
        return True if hi < 0 else (False if lo >= 0 else None)
    if op == "<=":
        return True if hi <= 0 else (False if lo > 0 else None)
    if op == ">":
        return True if lo > 0 else (False if hi <= 0 else None)
    if op == ">=":
        return True if lo >= 0 else (False if hi < 0 else None)
    if op == "=":
        if lo == hi == 0:
            return True
        return False if (lo > 0 or hi < 0) else None
    if lo > 0 or hi < 0:
        return True
    return False if lo == hi == 0 else None
