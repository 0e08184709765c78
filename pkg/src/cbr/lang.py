"""Abstract syntax and reference interpreter of the mini imperative language.

The interpreter is the ground truth for every reachability answer: a
witness is only reported after replaying it here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union

from .expr import Rel, Term, eval_constraint, eval_term, term_vars, vars_of


@dataclass(frozen=True)
class Assign:
    var: str
    value: Term
    label: Optional[str] = None


@dataclass(frozen=True)
class Skip:
    label: Optional[str] = None


@dataclass(frozen=True)
class If:
    cond: Rel
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...] = ()
    label: Optional[str] = None


@dataclass(frozen=True)
class While:
    cond: Rel
    body: tuple["Stmt", ...]
    label: Optional[str] = None


Stmt = Union[Assign, Skip, If, While]


@dataclass(frozen=True)
class Param:
    name: str
    lo: int
    hi: int


@dataclass(frozen=True)
class Program:
    name: str
    params: tuple[Param, ...]
    body: tuple[Stmt, ...]

    def statements(self) -> list[Stmt]:
        return list(walk(self.body))

    def labels(self) -> list[str]:
        return [s.label for s in walk(self.body) if s.label is not None]

    def find(self, label: str) -> Optional[Stmt]:
        return next((s for s in walk(self.body) if s.label == label), None)

    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)


def walk(stmts: tuple[Stmt, ...]) -> Iterator[Stmt]:
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk(s.then)
            yield from walk(s.orelse)
        elif isinstance(s, While):
            yield from walk(s.body)


def assigned(stmts: tuple[Stmt, ...]) -> list[str]:
    """Variables assigned anywhere in ``stmts``, in first-seen order."""
    out: list[str] = []
    for s in walk(stmts):
        if isinstance(s, Assign) and s.var not in out:
            out.append(s.var)
    return out


def used(stmts: tuple[Stmt, ...]) -> list[str]:
    out: list[str] = []
    for s in walk(stmts):
        names: set[str] = set()
        if isinstance(s, Assign):
            names = term_vars(s.value) | {s.var}
        elif isinstance(s, (If, While)):
            names = set(vars_of(s.cond))
        for n in sorted(names):
            if n not in out:
                out.append(n)
    return out


# -- interpreter ------------------------------------------------------------

class StepBudgetExceeded(RuntimeError):
    pass


@dataclass
class ExecResult:
    reached: list[str]
    state: dict[str, int]
    budget_exceeded: bool = False

    def visited(self, label: str) -> bool:
        return label in self.reached


@dataclass
class _Run:
    budget: int
    reached: list[str] = field(default_factory=list)


def exec_block(stmts: tuple[Stmt, ...], env: dict[str, int], budget: int = 10**6,
               reached: Optional[list[str]] = None) -> dict[str, int]:
    """Execute ``stmts`` on a copy of ``env``; raises on budget exhaustion."""
    run = _Run(budget, reached if reached is not None else [])
    env = dict(env)
    _exec(stmts, env, run)
    return env


def _tick(run: _Run) -> None:
    run.budget -= 1
    if run.budget < 0:
        raise StepBudgetExceeded("step budget exceeded")


def _exec(stmts: tuple[Stmt, ...], env: dict[str, int], run: _Run) -> None:
    for s in stmts:
        _tick(run)
        if s.label is not None:
            run.reached.append(s.label)
        if isinstance(s, Assign):
            env[s.var] = eval_term(s.value, env)
        elif isinstance(s, If):
            _exec(s.then if eval_constraint(s.cond, env) else s.orelse, env, run)
        elif isinstance(s, While):
            first = True
            while eval_constraint(s.cond, env):
                if not first and s.label is not None:
                    run.reached.append(s.label)
                first = False
                _tick(run)
                _exec(s.body, env, run)


def interpret(p: Program, inputs: Mapping[str, int], step_budget: int = 10**6) -> ExecResult:
    """Run ``p`` on ``inputs``; records every label executed, in order."""
    env: dict[str, int] = {}
    for prm in p.params:
        if prm.name not in inputs:
            raise KeyError(f"missing input {prm.name!r}")
        v = inputs[prm.name]
        if not prm.lo <= v <= prm.hi:
            raise ValueError(f"input {prm.name}={v} outside [{prm.lo}, {prm.hi}]")
        env[prm.name] = v
    run = _Run(step_budget)
    try:
        _exec(p.body, env, run)
    except StepBudgetExceeded:
        return ExecResult(run.reached, env, True)
    return ExecResult(run.reached, env)
