"""Call-by-name one-step reduction and bounded evaluation.

Reduction only ever happens in the head of an application or the
scrutinee of a case; nothing is reduced under lambdas, inside constructor
arguments or in case branches.  ``e where defs`` steps to ``e`` with the
function environment extended by ``defs``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

from .core import App, Case, Con, Expr, Fun, Lam, Let, PCon, Var, Where, substitute
from .errors import BudgetExhausted, EvaluationStuck

DEFAULT_BUDGET = 100_000


class StuckKind(enum.Enum):
    FREE_VARIABLE_SCRUTINEE = "FreeVariableScrutinee"
    FREE_VARIABLE_HEAD = "FreeVariableHead"
    FREE_VARIABLE = "FreeVariable"
    NO_MATCHING_BRANCH = "NoMatchingBranch"
    UNKNOWN_FUNCTION = "UnknownFunction"
    ILL_TYPED = "IllTyped"


@dataclass(frozen=True)
class Reduced:
    next: Expr
    rule: str  # "beta", "con", "fun" or "where"
    env: Mapping | None = None  # set only when a where extended the environment


@dataclass(frozen=True)
class Stuck:
    reason: StuckKind
    at: Expr


@dataclass(frozen=True)
class AlreadyValue:
    value: Expr


StepResult = Reduced | Stuck | AlreadyValue


def is_value(e: Expr) -> bool:
    return isinstance(e, (Con, Lam))


def match_branch(c: Con, branches) -> Expr | None:
    """Select and instantiate the branch for constructor value ``c``."""
    for pat, body in branches:
        if isinstance(pat, PCon):
            if pat.name == c.name:
                return substitute(body, dict(zip(pat.vars, c.args)))
        else:
            return body
    return None


def step(e: Expr, env: Mapping) -> StepResult:
    match e:
        case Con() | Lam():
            return AlreadyValue(e)
        case Var():
            return Stuck(StuckKind.FREE_VARIABLE, e)
        case Fun(name):
            if name not in env:
                return Stuck(StuckKind.UNKNOWN_FUNCTION, e)
            return Reduced(env[name], "fun")
        case Let(x, bound, body):
            return Reduced(substitute(body, (x, bound)), "beta")
        case Where(body, defs):
            return Reduced(body, "where", {**env, **dict(defs)})
        case App(f, a):
            if isinstance(f, Lam):
                return Reduced(substitute(f.body, (f.param, a)), "beta")
            if isinstance(f, Con):
                return Stuck(StuckKind.ILL_TYPED, e)
            if isinstance(f, Var):
                return Stuck(StuckKind.FREE_VARIABLE_HEAD, e)
            r = step(f, env)
            if isinstance(r, Reduced):
                return Reduced(App(r.next, a, e.loc), r.rule, r.env)
            return r
        case Case(scrut, branches):
            if isinstance(scrut, Con):
                chosen = match_branch(scrut, branches)
                if chosen is None:
                    return Stuck(StuckKind.NO_MATCHING_BRANCH, e)
                return Reduced(chosen, "con")
            if isinstance(scrut, Lam):
                return Stuck(StuckKind.ILL_TYPED, e)
            if isinstance(scrut, Var):
                return Stuck(StuckKind.FREE_VARIABLE_SCRUTINEE, e)
            r = step(scrut, env)
            if isinstance(r, Reduced):
                return Reduced(Case(r.next, branches, e.loc), r.rule, r.env)
            if isinstance(r, Stuck) and r.reason is StuckKind.FREE_VARIABLE:
                return Stuck(StuckKind.FREE_VARIABLE_SCRUTINEE, r.at)
            return r
    raise TypeError(f"not an expression: {e!r}")


class Evaluator:
    """Runs ``step`` under a shared step budget."""

    def __init__(self, env: Mapping | None = None, budget: int = DEFAULT_BUDGET):
        if budget <= 0:
            raise ValueError("budget must be positive")
        self.env = dict(env or {})
        self.budget = budget
        self.steps = 0

    def whnf(self, e: Expr) -> Expr:
        env = self.env
        while True:
            r = step(e, env)
            if isinstance(r, AlreadyValue):
                return r.value
            if isinstance(r, Stuck):
                raise EvaluationStuck(r.reason, r.at)
            if self.steps >= self.budget:
                raise BudgetExhausted(self.budget, e)
            self.steps += 1
            e = r.next
            if r.env is not None:
                env = r.env
                self.env = dict(env)

    def ground(self, e: Expr) -> Expr:
        v = self.whnf(e)
        if isinstance(v, Con) and v.args:
            return Con(v.name, tuple(self.ground(a) for a in v.args), v.loc)
        return v


def eval_whnf(e: Expr, env: Mapping | None = None, budget: int = DEFAULT_BUDGET) -> Expr:
    return Evaluator(env, budget).whnf(e)


def eval_ground(e: Expr, env: Mapping | None = None, budget: int = DEFAULT_BUDGET) -> Expr:
    return Evaluator(env, budget).ground(e)
