"""Reachability of a labelled statement: SSA, propagation, labelling, replay."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .lang import Program, interpret
from .ssa import to_ssa_constraints
from .store import Config, Stats, Store
from .wconstraint import post_items

log = logging.getLogger(__name__)

FOUND = "found"
EXHAUSTED = "exhausted"
BUDGET = "budget-exceeded"


@dataclass
class ReachabilityAnswer:
    status: str
    witness: Optional[dict[str, int]]
    stats: Stats
    invariants: list[dict] = field(default_factory=list)
    bounds_after_propagation: dict[str, tuple] = field(default_factory=dict)

    def as_dict(self, with_invariants: bool = False) -> dict:
        out = {"status": self.status, "witness": self.witness, "stats": self.stats.as_dict()}
        if with_invariants:
            out["invariants"] = self.invariants
        return out


def _invariants(store: Store) -> list[dict]:
    out = []
    for w in store.wconstraints:
        if w.P is None:
            continue
        out.append({"label": w.label, "depth": w.depth,
                    "P": w.P.dump(), "Q": w.Q.dump() if w.Q is not None else None})
    return out


def build_store(p: Program, target: str, config: Optional[Config] = None):
    """Post the reachability constraints of ``target``; returns the store,
    the parameter variables and whether the first propagation succeeded."""
    system = to_ssa_constraints(p, target)
    store = Store(config or Config())
    store.counters.update(system.namer.counters)
    for name, var in system.params.items():
        lo, hi = system.bounds[var]
        store.new_var(var, lo, hi)
    ok = post_items(store, system.items, root=True) and store.post_all(system.path)
    ok = ok and store.propagate()
    return store, system.params, ok


def solve_reachability(p: Program, target: str, config: Optional[Config] = None,
                       limit: Optional[int] = None, step_budget: int = 10**6) -> ReachabilityAnswer:
    """Find inputs whose execution reaches the statement labelled ``target``.

    ``found`` answers are confirmed by the interpreter.  ``exhausted`` means
    no input reaches the target, unless an unrolling budget was hit along
    the way, in which case the answer is ``budget-exceeded``.
    """
    store, params, ok = build_store(p, target, config)
    after = {name: store.bounds(var) for name, var in params.items()}
    invariants = _invariants(store)
    if not ok:
        status = BUDGET if store.budget_hit else EXHAUSTED
        return ReachabilityAnswer(status, None, store.snapshot_stats(), invariants, after)

    order = [params[prm.name] for prm in p.params]

    def accept(val: dict[str, int]) -> bool:
        inputs = {name: val[var] for name, var in params.items()}
        run = interpret(p, inputs, step_budget)
        if run.budget_exceeded:
            store.budget_hit = True
            return False
        return run.visited(target)

    res = store.label_search(order, limit=limit, accept=accept)
    invariants = invariants or _invariants(store)
    if res.status == "found":
        witness = {name: res.valuation[var] for name, var in params.items()}
        log.info("witness %s after %d backtracks", witness, res.stats.backtracks)
        return ReachabilityAnswer(FOUND, witness, res.stats, invariants, after)
    if res.status == "limit" or store.budget_hit:
        return ReachabilityAnswer(BUDGET, None, res.stats, invariants, after)
    return ReachabilityAnswer(EXHAUSTED, None, res.stats, invariants, after)
