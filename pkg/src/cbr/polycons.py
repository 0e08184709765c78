"""Polyhedral consistency: relax, optimise every bound, round inward.

``poly_filter`` is one application of ``gamma_box(relax_system(cs, b))``
met with ``b``.  ``mixed_fixpoint`` alternates it with bound-consistency
sweeps; each poly round re-relaxes from the current bounds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

from .domains import Box, Interval
from .expr import Rel, vars_of
from .filtering import bound_fixpoint
from .linear import LinearExpression
from .relaxation import ENVELOPE, relax_system
from . import simplex

log = logging.getLogger(__name__)


def poly_filter(cs: Sequence[Rel], b: Box, strategy: str = ENVELOPE) -> Box:
    """Tighten every finite-or-not bound of the variables of ``cs`` to the
    rounded optimum over the linear relaxation (two LPs per variable)."""
    if b.is_empty():
        return b
    p = relax_system(cs, b, strategy)
    if p.is_empty():
        return Box.empty(b.vars)
    used = set()
    for c in cs:
        used.update(vars_of(c))
    out = []
    for v, iv in zip(b.vars, b.intervals):
        if v not in used:
            out.append(iv)
            continue
        x = LinearExpression.var(v)
        hi = simplex.maximize(p.constraints, x)
        if hi.status == simplex.INFEASIBLE:
            return Box.empty(b.vars)
        lo = simplex.minimize(p.constraints, x)
        new_lo = math.ceil(lo.value) if lo.optimal else iv.lo
        new_hi = math.floor(hi.value) if hi.optimal else iv.hi
        new_lo, new_hi = max(new_lo, iv.lo), min(new_hi, iv.hi)
        if new_lo > new_hi:
            return Box.empty(b.vars)
        out.append(Interval(new_lo, new_hi))
    return Box(b.vars, tuple(out))


@dataclass
class MixedResult:
    box: Box
    stable: bool
    rounds: int
    trace: list[tuple[str, Box]] = field(default_factory=list)


def mixed_fixpoint(cs: Sequence[Rel], b: Box, strategy: str = ENVELOPE,
                   max_rounds: int = 50) -> MixedResult:
    """Alternate bound sweeps and ``poly_filter`` until nothing changes.

    A round is one ``poly_filter`` followed by one bound sweep.  The trace
    records the box after each step, labelled ``"poly"`` or ``"bound"``.
    """
    trace: list[tuple[str, Box]] = []
    cur = b
    for r in range(1, max_rounds + 1):
        nxt = poly_filter(cs, cur, strategy)
        trace.append(("poly", nxt))
        if not nxt.is_empty():
            nxt = bound_fixpoint(cs, nxt)
            trace.append(("bound", nxt))
        if nxt.is_empty():
            return MixedResult(nxt, True, r, trace)
        if nxt == cur:
            return MixedResult(cur, True, r, trace)
        cur = nxt
    return MixedResult(cur, False, max_rounds, trace)
