"""The ``w`` constraint for loops, its concrete and abstract fixpoints.

``w(M1, M2, M3, Dec, Body)`` holds when running ``while (Dec) Body`` from
memory state ``M1`` ends in ``M3``.  Attached to a store it behaves as a
set of guarded rules, tried in this order on every awakening:

R1  ``Dec`` entailed at M1: post Body from M1 to a fresh M2 and a new
    ``w(M2, _, M3)``.
R2  ``not Dec`` entailed at M1: post ``M3 = M1``.
R3  ``Dec and Body`` disentailed: post ``not Dec`` and ``M3 = M1``.
R4  ``not Dec and M3 = M1`` disentailed: post ``Dec``, Body and a new w.
R5  otherwise: join.  The abstract fixpoint relating M1 to M3 is computed
    on polyhedra, restricted to exit states and to the current box, and
    its bounding box prunes the domains.

Root instances (posted from the program, not from an unrolling) join once
eagerly before looking at the rules.
"""

from __future__ import annotations

import logging
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .domains import OracleCapExceeded, TupleSet
from .expr import Rel, Var, linear_form, map_vars, negate, rename, vars_of
from .lang import Stmt, StepBudgetExceeded, assigned, exec_block
from .linear import LinearConstraint, LinearExpression, eq
from .polyhedra import (Polyhedron, alpha_box, gamma_box, hull, includes, join, project,
                        reduce, widen)
from .relaxation import relax
from .ssa import IfSpec, Item, SSABuilder, WSpec
from .store import (DISENTAILED, ENTAILED, Propagator, Store)

log = logging.getLogger(__name__)

MemoryState = dict  # program variable -> solver variable

ACTIVE = "active"
RESOLVED = "resolved"


# -- substitution -----------------------------------------------------------

def substitute(template, frm: Mapping[str, str], to: Optional[Mapping[str, str]] = None,
               fresh: Optional[Callable[[str], str]] = None):
    """Rename a condition into solver variables, or SSA-encode a body.

    For a :class:`Rel`, every program variable is replaced through ``frm``.
    For a statement tuple, assignments become equalities threaded through
    fresh intermediates; the last version of each variable in ``to`` is
    named as ``to`` says (variables the body leaves alone get ``to = frm``).
    """
    if isinstance(template, Rel):
        return rename(template, frm)
    names = _Fresh(fresh)
    items, final = SSABuilder(names).block(tuple(template), dict(frm))
    if to:
        mapping = {final[v]: to[v] for v in to if v in final and final[v] != frm.get(v)}
        items = [_rename_item(i, mapping) for i in items]
        items += [Rel("=", Var(to[v]), Var(frm[v])) for v in to
                  if v in frm and final.get(v) == frm[v] and to[v] != frm[v]]
    return items


class _Fresh:
    def __init__(self, fresh: Optional[Callable[[str], str]]):
        self.fresh = fresh
        self.n = 0

    def __call__(self, base: str) -> str:
        if self.fresh is not None:
            return self.fresh(base)
        self.n += 1
        return f"{base}'{self.n}"


def _partial(c: Rel, mapping: Mapping[str, str]) -> Rel:
    def f(name: str) -> Var:
        return Var(mapping.get(name, name))
    return Rel(c.op, map_vars(c.left, f), map_vars(c.right, f))


def _rename_item(i: Item, mapping: Mapping[str, str]) -> Item:
    if isinstance(i, Rel):
        return _partial(i, mapping)
    if isinstance(i, WSpec):
        return WSpec(tuple((v, mapping.get(s, s)) for v, s in i.m1),
                     tuple((v, mapping.get(s, s)) for v, s in i.m3), i.dec, i.body, i.label)
    return IfSpec(_partial(i.cond, mapping), tuple(_rename_item(x, mapping) for x in i.then),
                  tuple(_rename_item(x, mapping) for x in i.orelse),
                  tuple(mapping.get(m, m) for m in i.merges), i.label)


# -- posting items into a store ----------------------------------------------

def post_items(store: Store, items: Iterable[Item], root: bool = False) -> bool:
    for i in items:
        if isinstance(i, Rel):
            ok = store.post(i)
        elif isinstance(i, WSpec):
            ok = add_w(store, WConstraint(dict(i.m1), dict(i.m3), i.dec, i.body, root=root,
                                          label=i.label))
        else:
            ok = store.add_propagator(IfConstraint(i, store))
        if not ok:
            return False
    return True


def add_w(store: Store, w: "WConstraint") -> bool:
    store.wconstraints.append(w)
    store.trail.append(("w",))
    store._register(w._join_prop, watch=False)
    return store.add_propagator(w)


class IfConstraint(Propagator):
    """Conditional with merge variables; constructive disjunction while the
    condition is undecided."""

    priority = 3

    def __init__(self, spec: IfSpec, store: Store):
        self.spec = spec
        for m in spec.merges:
            store.ensure(m)
        names = set(vars_of(spec.cond)) | set(spec.merges)
        for part in (spec.then, spec.orelse):
            for i in part:
                if isinstance(i, Rel):
                    names.update(v for v in vars_of(i) if v in store.lo)
        self._vars = tuple(sorted(names))

    def vars(self) -> Sequence[str]:
        return self._vars

    def _commit(self, store: Store, branch: Sequence[Item], cond: Rel) -> bool:
        store.deactivate(self)
        return store.post(cond) and post_items(store, branch)

    def run(self, store: Store) -> bool:
        c = self.spec.cond
        st = store.entailment_status(c)
        if st == ENTAILED:
            return self._commit(store, self.spec.then, c)
        if st == DISENTAILED:
            return self._commit(store, self.spec.orelse, negate(c))
        ft, ct = store.trial(lambda s: s.post(c) and post_items(s, self.spec.then))
        fe, ce = store.trial(lambda s: s.post(negate(c)) and post_items(s, self.spec.orelse))
        if ft and fe:
            return False
        if ft:
            return self._commit(store, self.spec.orelse, negate(c))
        if fe:
            return self._commit(store, self.spec.then, c)
        if ft is None or fe is None:
            return True
        upd = {}
        for v in set(ct) & set(ce):
            upd[v] = (min(ct[v][0], ce[v][0]), max(ct[v][1], ce[v][1]))
        return store.set_many(upd)


# -- the w constraint ----------------------------------------------------------

class _JoinPropagator(Propagator):
    priority = 4

    def __init__(self, w: "WConstraint"):
        self.w = w

    def run(self, store: Store) -> bool:
        if self.w.status != ACTIVE:
            return True
        return self.w.join(store)


class WConstraint(Propagator):
    priority = 3

    def __init__(self, m1: Mapping[str, str], m3: Mapping[str, str], dec: Rel,
                 body: Sequence[Stmt], depth: int = 1, root: bool = False,
                 label: Optional[str] = None):
        self.m1 = dict(m1)
        self.m3 = dict(m3)
        self.m2: Optional[dict] = None
        self.dec = dec
        self.body = tuple(body)
        self.depth = depth
        self.root = root
        self.label = label
        self.status = ACTIVE
        self.rule: Optional[str] = None
        self.joined = False
        self.P: Optional[Polyhedron] = None
        self.Q: Optional[Polyhedron] = None
        self._join_prop = _JoinPropagator(self)
        self._cache: dict = {}
        self._last_sig = None
        self._vars = tuple(dict.fromkeys(list(self.m1.values()) + list(self.m3.values())))

    def vars(self) -> Sequence[str]:
        return self._vars

    def in_state(self) -> dict[str, str]:
        return dict(self.m1)

    def out_state(self) -> dict[str, str]:
        st = dict(self.m1)
        st.update(self.m3)
        return st

    def __repr__(self) -> str:
        return f"w[{self.label or ''}#{self.depth}]({self.m1} -> {self.m3}, {self.dec})"

    # rules ------------------------------------------------------------

    def run(self, store: Store) -> bool:
        if self.status != ACTIVE:
            return True
        store.stats.w_awakenings += 1
        if self.root and not self.joined:
            store.set_attr(self, "joined", True)
            if not self.join(store):
                return False
        dec1 = rename(self.dec, self.m1)
        st = store.entailment_status(dec1)
        if st == ENTAILED:
            return self._unroll(store, "R1")
        if st == DISENTAILED:
            return self._exit(store, "R2")
        failed, _ = store.trial(lambda s: s.post(dec1) and post_items(s, self._encode(s)[0]))
        if failed:
            return self._exit(store, "R3")
        if self._exit_impossible(store, dec1):
            return self._unroll(store, "R4")
        sig = tuple(store.bounds(v) for v in self._vars)
        if sig != self._last_sig:
            store._enqueue(self._join_prop)
        return True

    def _exit_equalities(self) -> list[Rel]:
        return [Rel("=", Var(self.m3[v]), Var(self.m1[v])) for v in self.m3]

    def _exit_impossible(self, store: Store, dec1: Rel) -> bool:
        if self.Q is not None:
            lin = [eq(LinearExpression.var(self.m3[v]), LinearExpression.var(self.m1[v]))
                   for v in self.m3]
            if self.Q.add(lin).is_empty():
                return True
        return store.trial_fails([negate(dec1)] + self._exit_equalities())

    def _encode(self, store: Store) -> tuple[list[Item], dict[str, str]]:
        items, final = SSABuilder(store.fresh).block(self.body, dict(self.m1))
        return items, final

    def _resolve(self, store: Store, rule: str) -> None:
        store.set_attr(self, "status", RESOLVED)
        store.set_attr(self, "rule", rule)
        store.deactivate(self)
        store.deactivate(self._join_prop)

    def _unroll(self, store: Store, rule: str) -> bool:
        if self.depth >= store.config.max_unroll:
            store.budget_hit = True
            return False
        self._resolve(store, rule)
        dec1 = rename(self.dec, self.m1)
        if not store.post(dec1):
            return False
        items, final = self._encode(store)
        store.set_attr(self, "m2", final)
        if not post_items(store, items):
            return False
        m2 = {v: final[v] for v in self.m1}
        child = WConstraint(m2, self.m3, self.dec, self.body, self.depth + 1, False, self.label)
        return add_w(store, child)

    def _exit(self, store: Store, rule: str) -> bool:
        self._resolve(store, rule)
        dec1 = rename(self.dec, self.m1)
        return store.post(negate(dec1)) and store.post_all(self._exit_equalities())

    # join ---------------------------------------------------------------

    def join(self, store: Store) -> bool:
        store.stats.join_invocations += 1
        cfg = store.config
        in_names = tuple(dict.fromkeys(self.m1.values()))
        in_box = store.box(in_names)
        P = self._cache.get(in_box)
        if P is None:
            P, _ = abstract_fixpoint(self, alpha_box(in_box), cfg.widen_delay, cfg.join, cfg.relax)
            self._cache[in_box] = P
        box = store.box(P.dims)
        Q = project_solutions(self, P, cfg.relax)
        Q = Q.add(alpha_box(box).constraints)
        store.set_attr(self, "P", P)
        if Q.is_empty():
            store.set_attr(self, "Q", Polyhedron.empty(P.dims))
            return False
        Q = reduce(Q)
        store.set_attr(self, "Q", Q)
        g = gamma_box(Q)
        ok = store.set_many({v: (iv.lo, iv.hi) for v, iv in zip(g.vars, g.intervals)})
        self._last_sig = tuple(store.bounds(v) for v in self._vars)
        return ok


# -- concrete fixpoint (oracle) -----------------------------------------------

def concrete_fixpoint(w: WConstraint, init: TupleSet, cap: int = 100_000,
                      step_budget: int = 10_000) -> tuple[TupleSet, TupleSet]:
    """``(T, Z_w)`` by iterating one body execution from the diagonal.

    ``init`` ranges over the solver variables of ``w.m1`` (or over the
    program variables, in the order of ``w.m1``).  Results range over the
    ``m1`` names followed by the ``m3`` names.
    """
    prog = list(w.m1)
    in_names = [w.m1[v] for v in prog]
    if list(init.vars) == prog:
        init = TupleSet(tuple(in_names), init.tuples)
    if list(init.vars) != in_names:
        raise ValueError(f"init must range over {in_names}")
    outs = list(w.m3)
    out_names = [w.m3[v] for v in outs]
    dims = tuple(in_names + out_names)

    def envs(t):
        return dict(zip(prog, t))

    start = {t: dict(zip(outs, (envs(t)[v] for v in outs))) for t in init.tuples}
    pairs: set[tuple] = set()
    frontier: list[tuple[tuple, dict]] = []
    for t in init.tuples:
        env = envs(t)
        pairs.add(t + tuple(env[v] for v in outs))
        frontier.append((t, env))
    seen = set(pairs)
    exits: set[tuple] = set()
    for _ in range(cap):
        nxt = []
        for s, env in frontier:
            if _holds(w.dec, env):
                try:
                    env2 = exec_block(w.body, env, step_budget)
                except StepBudgetExceeded as exc:
                    raise OracleCapExceeded(str(exc)) from exc
                env2 = {v: env2[v] for v in prog}
                key = s + tuple(env2[v] for v in outs)
                if key not in seen:
                    seen.add(key)
                    nxt.append((s, env2))
            else:
                exits.add(s + tuple(env[v] for v in outs))
        if len(seen) > cap:
            raise OracleCapExceeded("concrete fixpoint exceeds the cap")
        if not nxt:
            break
        frontier = nxt
    else:
        raise OracleCapExceeded("concrete fixpoint did not stabilise")
    del start
    return TupleSet(dims, frozenset(seen)), TupleSet(dims, frozenset(exits))


def _holds(c: Rel, env: Mapping[str, int]) -> bool:
    from .expr import eval_constraint
    return eval_constraint(c, env)


# -- abstract fixpoint -------------------------------------------------------------

class _Abstract:
    """Polyhedral post-conditions of statements (the linearised semantics)."""

    def __init__(self, widen_delay: int, join_mode: str, strategy: str):
        self.widen_delay = widen_delay
        self.join = hull if join_mode == "hull" else join
        self.strategy = strategy
        self.n = 0
        self.steps: list[int] = []

    def fresh(self, v: str) -> str:
        self.n += 1
        return f"{v}~{self.n}"

    def lin(self, c: Rel, P: Polyhedron) -> list[LinearConstraint]:
        lf = linear_form(c)
        if lf is not None:
            return [lf]
        if c.op == "!=":
            return []
        names = [v for v in vars_of(c) if v in P.dims]
        b = gamma_box(P, names)
        if b.is_empty():
            return [LinearConstraint.make(LinearExpression.const(-1))]
        return relax(c, b, self.strategy)

    def add(self, P: Polyhedron, cons: Sequence[LinearConstraint]) -> Polyhedron:
        extra = [v for c in cons for v in c.variables if v not in P.dims]
        if extra:
            P = P.extend(list(dict.fromkeys(extra)))
        return P.add(cons)

    def block(self, stmts: Sequence[Stmt], P: Polyhedron, state: dict[str, str]):
        from .lang import Assign, If, Skip, While
        state = dict(state)
        for s in stmts:
            if P.is_canonical_empty():
                return P, state
            if isinstance(s, Skip):
                continue
            if isinstance(s, Assign):
                new = self.fresh(s.var)
                P = P.extend([new])
                P = self.add(P, self.lin(Rel("=", Var(new), rename(s.value, state)), P))
                state[s.var] = new
            elif isinstance(s, If):
                cond = rename(s.cond, state)
                Pt, st_t = self.block(s.then, self.add(P, self.lin(cond, P)), state)
                Pe, st_e = self.block(s.orelse, self.add(P, self.lin(negate(cond), P)), state)
                out = {}
                merges: list[str] = []
                mt, me = [], []
                for v in sorted(set(st_t) & set(st_e)):
                    if st_t[v] == st_e[v]:
                        out[v] = st_t[v]
                        continue
                    m = self.fresh(v)
                    merges.append(m)
                    mt.append(eq(LinearExpression.var(m), LinearExpression.var(st_t[v])))
                    me.append(eq(LinearExpression.var(m), LinearExpression.var(st_e[v])))
                    out[v] = m
                keep = tuple(P.dims) + tuple(merges)
                Pt = self._onto(self.add(Pt.extend(merges), mt), keep)
                Pe = self._onto(self.add(Pe.extend(merges), me), keep)
                P = self.join(Pt, Pe)
                state = out
            elif isinstance(s, While):
                X, out = self.loop(s.cond, s.body, P, state)
                final = dict(state)
                final.update(out)
                P = self.add(X, self.lin(rename(negate(s.cond), final), X))
                state = final
            else:
                raise TypeError(f"unknown statement {s!r}")
        return P, state

    def _onto(self, P: Polyhedron, keep: Sequence[str]) -> Polyhedron:
        drop = [d for d in P.dims if d not in keep]
        return project(P, drop).with_dims(tuple(keep)) if drop else P.with_dims(tuple(keep))

    def loop(self, cond: Rel, body: Sequence[Stmt], P: Polyhedron, state: dict[str, str],
             out: Optional[dict[str, str]] = None,
             trace: Optional[list] = None) -> tuple[Polyhedron, dict[str, str]]:
        written = [v for v in assigned(tuple(body)) if v in state]
        if out is None:
            out = {v: self.fresh(v) for v in written}
        X = P.extend(list(out.values()))
        X = X.add(eq(LinearExpression.var(out[v]), LinearExpression.var(state[v])) for v in out)
        X = reduce(X)
        base = X.dims
        k = 0
        while True:
            if trace is not None:
                trace.append(X)
            k += 1
            mid = {v: self.fresh(v) for v in out}
            Y = X.rename({out[v]: mid[v] for v in out})
            st = dict(state)
            st.update(mid)
            Y = self.add(Y, self.lin(rename(cond, st), Y))
            Y, st2 = self.block(body, Y, st)
            Y = self.add(Y.extend(list(out.values())),
                         [eq(LinearExpression.var(out[v]), LinearExpression.var(st2[v])) for v in out])
            img = self._onto(Y, base)
            J = self.join(X, img)
            new = J if k <= self.widen_delay else widen(X, J)
            if includes(X, new):
                self.steps.append(k)
                return X, out
            X = new


def abstract_fixpoint(w: WConstraint, init: Polyhedron, widen_delay: int = 3,
                      join_mode: str = "weak", strategy: str = "envelope",
                      trace: Optional[list] = None) -> tuple[Polyhedron, int]:
    """Polyhedral over-approximation ``P`` of the loop relation and the number
    of iterations needed to stabilise.

    ``init`` ranges over the ``m1`` solver variables (dimensions of ``m3``,
    if present, are assumed tied to ``m1`` by the diagonal and are
    re-derived).  ``P`` ranges over the ``m1`` variables followed by the
    ``m3`` variables.  ``trace``, when given, receives the iterates
    ``P^0, P^1, ...`` in order.
    """
    a = _Abstract(widen_delay, join_mode, strategy)
    in_names = tuple(dict.fromkeys(w.m1.values()))
    out_only = [d for d in init.dims if d not in in_names]
    P0 = project(init, out_only) if out_only else init
    P0 = P0.with_dims(in_names)
    X, _ = a.loop(w.dec, w.body, P0, dict(w.m1), dict(w.m3), trace)
    return X, a.steps[-1]


def project_solutions(w: WConstraint, p: Polyhedron, strategy: str = "envelope") -> Polyhedron:
    """``p`` restricted to exit states (``not Dec`` over the ``m3`` variables)."""
    a = _Abstract(0, "weak", strategy)
    c = rename(negate(w.dec), w.out_state())
    return a.add(p, a.lin(c, p))
