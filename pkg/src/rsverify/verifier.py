"""Three-valued verification of LTL formulas over restricted programs.

``Verifier.verify(e, formula, rho)`` dispatches on the formula and on the
shape of ``e``.  Rule numbers in the trace are the ones used in the
literature for this rule system:

* 1-4   connectives, combined with the Kleene tables of :mod:`ltl`
* 5a-5d a constructed stream ``Cons e0 e1``
* 6a-6c a call ``f x1 .. xn``; ``rho`` holds the calls already met
  while verifying the same formula and closes loops (True for G, False
  for F, Undefined otherwise)
* 7a-7b a case on a variable (7a adds the fairness disjunct for F)
* 8     an abstracted (let-bound) variable
* 9     let, verified through its body
* 10    where, extending the function environment
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .core import (
    App,
    Case,
    Con,
    Expr,
    Fun,
    FunDef,
    Let,
    PCon,
    RestrictedProgram,
    Var,
    Where,
    substitute,
    unapply,
    unlam,
)
from .errors import (
    BudgetExhausted,
    EvaluationStuck,
    PropositionDivergence,
    PropositionStuckOnConstructor,
    VerificationError,
)
from .evaluator import DEFAULT_BUDGET, Evaluator, StuckKind
from .ltl import (
    Always,
    And,
    Atom,
    Eventually,
    FairnessSet,
    Formula,
    Implies,
    Next,
    Not,
    Or,
    TruthVal,
    k_and,
    k_implies,
    k_not,
    k_or,
    subst_state,
)

_FREE_STUCK = {StuckKind.FREE_VARIABLE, StuckKind.FREE_VARIABLE_HEAD,
               StuckKind.FREE_VARIABLE_SCRUTINEE}


@dataclass(frozen=True)
class TraceEntry:
    rule: str
    function: str | None
    formula: str
    rho: tuple


@dataclass
class Report:
    verdict: TruthVal
    trace: list = field(default_factory=list)
    seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "seconds": round(self.seconds, 6),
            "trace": [{"rule": t.rule, "function": t.function, "formula": t.formula,
                       "rho": list(t.rho)} for t in self.trace],
        }


class Verifier:
    """One verification session: function environment, fairness, memo table."""

    def __init__(self, defs: dict | None = None, fairness: FairnessSet | None = None,
                 prop_env: dict | None = None, prop_budget: int = DEFAULT_BUDGET,
                 trace: bool = False):
        self.defs = dict(defs or {})
        self.fairness = fairness or FairnessSet(frozenset())
        self.prop_env = dict(prop_env or {})
        self.prop_budget = prop_budget
        self.trace: list | None = [] if trace else None
        self._memo: dict = {}
        self._names: dict = {}

    def _log(self, rule, function, formula, rho):
        if self.trace is not None:
            self.trace.append(TraceEntry(rule, function, str(formula),
                                         tuple(sorted({f for f, _ in rho}))))

    def verify(self, e: Expr, phi: Formula, rho: frozenset = frozenset()) -> TruthVal:
        # connectives first, whatever the expression
        match phi:
            case And(a, b):
                self._log("1", None, phi, rho)
                return k_and(self.verify(e, a, rho), self.verify(e, b, rho))
            case Or(a, b):
                self._log("2", None, phi, rho)
                return k_or(self.verify(e, a, rho), self.verify(e, b, rho))
            case Implies(a, b):
                self._log("3", None, phi, rho)
                return k_implies(self.verify(e, a, rho), self.verify(e, b, rho))
            case Not(a):
                self._log("4", None, phi, rho)
                return k_not(self.verify(e, a, rho))

        match e:
            case Con("Cons", (head, tail)):
                return self._stream(e, head, tail, phi, rho)
            case Where(body, defs):
                self._log("10", None, phi, rho)
                for f, d in defs:
                    params, fbody = unlam(d)
                    self.defs[f] = FunDef(tuple(params), fbody)
                return self.verify(body, phi, rho)
            case Let(_, _, body):
                self._log("9", None, phi, rho)
                return self.verify(body, phi, rho)
            case Case(Var(), branches):
                return self._case(branches, phi, rho)
            case Var():
                self._log("8", None, phi, rho)
                return TruthVal.UNDEFINED
            case Fun() | App():
                head, args = unapply(e)
                if isinstance(head, Fun):
                    return self._call(head.name, args, phi, rho)
                if isinstance(head, Var):
                    self._log("8", None, phi, rho)
                    return TruthVal.UNDEFINED
        raise VerificationError(f"expression is not in restricted form: {e!r}")

    # -- rule 5
    def _stream(self, e, head, tail, phi, rho):
        match phi:
            case Always(inner):
                self._log("5a", None, phi, rho)
                return k_and(self.verify(e, inner, frozenset()), self.verify(tail, phi, rho))
            case Eventually(inner):
                self._log("5b", None, phi, rho)
                return k_or(self.verify(e, inner, frozenset()), self.verify(tail, phi, rho))
            case Next(inner):
                self._log("5c", None, phi, rho)
                return self.verify(tail, inner, rho)
            case Atom(prop):
                self._log("5d", None, phi, rho)
                return self._atom(prop, head)
        raise VerificationError(f"unexpected formula {phi!r}")

    def _atom(self, prop: Expr, state: Expr) -> TruthVal:
        ev = Evaluator(self.prop_env, self.prop_budget)
        try:
            v = ev.whnf(subst_state(prop, state))
        except EvaluationStuck as exc:
            if exc.reason in _FREE_STUCK:
                # the state mentions an abstracted variable
                return TruthVal.UNDEFINED
            raise VerificationError(f"atomic proposition got stuck: {exc.reason.value}") from exc
        except BudgetExhausted as exc:
            raise PropositionDivergence(
                f"atomic proposition did not evaluate within {exc.budget} steps") from exc
        if isinstance(v, Con) and v.name in ("True", "False", "Undefined") and not v.args:
            return TruthVal(v.name)
        raise PropositionStuckOnConstructor(
            f"atomic proposition evaluated to a non-truth value: {v!r}")

    # -- rule 6
    def _call(self, f, args, phi, rho):
        closed = {Always: TruthVal.TRUE, Eventually: TruthVal.FALSE}.get(type(phi), TruthVal.UNDEFINED)
        rule = {Always: "6a", Eventually: "6b"}.get(type(phi), "6c")
        self._log(rule, f, phi, rho)
        # a call counts as seen only if it was met for this same formula;
        # otherwise stepping under X would close loops of the inner formula
        if (f, phi) in rho:
            return closed
        if f not in self.defs:
            raise VerificationError(f"call to undefined function {f}")
        d = self.defs[f]
        key = (f, tuple(a.name if isinstance(a, Var) else id(a) for a in args), id(phi), rho)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        body = substitute(d.body, dict(zip(d.params, args))) if d.params else d.body
        result = self.verify(body, phi, rho | {(f, phi)})
        self._memo[key] = result
        return result

    # -- rule 7
    def _case(self, branches, phi, rho):
        results = [self.verify(b, phi, rho) for _, b in branches]
        everything = results[0]
        for r in results[1:]:
            everything = k_and(everything, r)
        if not isinstance(phi, Eventually):
            self._log("7b", None, phi, rho)
            return everything
        self._log("7a", None, phi, rho)
        fair = TruthVal.FALSE
        for (pat, _), r in zip(branches, results):
            if isinstance(pat, PCon) and pat.name in self.fairness:
                fair = k_or(fair, r)
        return k_or(fair, everything)


def verify_program(p: RestrictedProgram, phi: Formula, fairness: FairnessSet,
                   prop_env: dict | None = None, prop_budget: int = DEFAULT_BUDGET,
                   trace: bool = False) -> Report:
    start = time.perf_counter()
    v = Verifier(p.defs, fairness, prop_env, prop_budget, trace)
    verdict = v.verify(p.top, phi, frozenset())
    return Report(verdict, v.trace or [], time.perf_counter() - start)
