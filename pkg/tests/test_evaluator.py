from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exprs
from rsverify.core import Con, ConstructorTable, apps, collect_defs, lams
from rsverify.corpus import read_text
from rsverify.errors import BudgetExhausted, EvaluationError, EvaluationStuck
from rsverify.evaluator import (
    AlreadyValue,
    Evaluator,
    Reduced,
    Stuck,
    StuckKind,
    eval_ground,
    eval_whnf,
    step,
)
from rsverify.ltl import parse_formula, subst_state
from rsverify.syntax import parse_expr, parse_program


def _table():
    t = ConstructorTable.with_builtins()
    t.declare("T", [("A", 0), ("B", 0), ("Nil", 0)])
    t.declare("ProcState", [("U", 0), ("W", 0)])
    t.declare("State", [("ObsState", 2)])
    t.declare("Nat", [("Zero", 0), ("Succ", 1)])
    return t


def _e(text, funs=frozenset()):
    return parse_expr(text, _table(), funs)


def test_beta_step():
    assert step(_e("(\\x. x) True"), {}) == Reduced(Con("True", ()), "beta")


def test_case_step():
    r = step(_e("case Cons A Nil of Cons h t: h | _: B"), {})
    assert r == Reduced(Con("A", ()), "con")


def test_let_step():
    r = step(_e("let x = A in x"), {})
    assert r == Reduced(Con("A", ()), "beta")


def test_value_does_not_step():
    assert isinstance(step(_e("Cons A Nil"), {}), AlreadyValue)


def test_stuck_on_free_scrutinee():
    r = step(_e("case y of A: B"), {})
    assert isinstance(r, Stuck) and r.reason is StuckKind.FREE_VARIABLE_SCRUTINEE


def test_no_matching_branch():
    r = step(_e("case A of B: A"), {})
    assert isinstance(r, Stuck) and r.reason is StuckKind.NO_MATCHING_BRANCH


def test_no_reduction_inside_constructor():
    e = _e("Cons ((\\x. x) A) Nil")
    assert eval_whnf(e) == e
    assert eval_ground(e) == _e("Cons A Nil")


PROPERTY1 = "G { case s of ObsState s1 s2: case s1 of U: (case s2 of U: False | _: True) | _: True }"


@pytest.mark.parametrize("state, expected", [("ObsState U U", "False"), ("ObsState W W", "True"),
                                              ("ObsState U W", "True")])
def test_property1_atom(state, expected):
    phi = parse_formula(PROPERTY1, _table())
    assert eval_whnf(subst_state(phi.arg.prop, _e(state))) == Con(expected, ())


def _lt_env():
    return collect_defs(parse_program(read_text("example3.rsl")).main)


def test_lt_on_naturals():
    env = _lt_env()
    funs = frozenset(env)
    assert eval_whnf(_e("lt Zero (Succ Zero)", funs), env) == Con("True", ())
    assert eval_whnf(_e("lt (Succ Zero) Zero", funs), env) == Con("False", ())
    assert eval_whnf(_e("lt Zero Zero", funs), env) == Con("False", ())


def test_budget_exhaustion():
    e = _e("(\\x. x x) (\\x. x x)")
    with pytest.raises(BudgetExhausted):
        eval_whnf(e, budget=50)


def test_stuck_raises():
    with pytest.raises(EvaluationStuck):
        eval_whnf(_e("case y of A: B"))


def _closed(e):
    fv = sorted(e.fv)
    return apps(lams(fv, e), *(Con("A", ()) for _ in fv))


def _outcome(e, budget):
    try:
        return ("value", Evaluator({}, budget).ground(e))
    except BudgetExhausted:
        return ("budget", None)
    except EvaluationError as exc:
        return ("error", type(exc).__name__)


@given(exprs())
def test_evaluation_is_deterministic(e):
    e = _closed(e)
    assert _outcome(e, 500) == _outcome(e, 500)


@given(exprs(), st.integers(1, 200), st.integers(0, 300))
@settings(max_examples=150)
def test_budget_is_monotone(e, small, extra):
    e = _closed(e)
    lo, hi = _outcome(e, small), _outcome(e, small + extra)
    if lo[0] != "budget":
        assert hi == lo
    if hi[0] == "budget":
        assert lo[0] == "budget"
