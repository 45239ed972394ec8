"""Random restricted stream programs and formulas for differential tests."""

from __future__ import annotations

import random

from rsverify.core import Case, Con, ConstructorTable, Fun, PCon, Var, WILDCARD, Where, App
from rsverify.core import lams, validate_restricted
from rsverify.ltl import Always, And, Atom, Eventually, Implies, Next, Not, Or
from rsverify.syntax import parse_expr

EVENTS = ["A", "B", "C"]
PROCS = ["T", "W", "U"]


def table() -> ConstructorTable:
    t = ConstructorTable.with_builtins()
    t.declare("Event", [(e, 0) for e in EVENTS])
    t.declare("ProcState", [(p, 0) for p in PROCS])
    t.declare("State", [("ObsState", 2)])
    return t


def random_program(rng: random.Random, max_functions: int = 8):
    n = rng.randint(1, max_functions)
    names = [f"f{i + 1}" for i in range(n)]
    defs = []
    for f in names:
        obs = Con("ObsState", (Con(rng.choice(PROCS)), Con(rng.choice(PROCS))))
        targets = {e: rng.choice(names) for e in EVENTS}
        if rng.random() < 0.5:
            listed = rng.sample(EVENTS, rng.randint(0, len(EVENTS) - 1))
            branches = [(PCon(e, ()), App(Fun(targets[e]), Var("es"))) for e in listed]
            branches.append((WILDCARD, App(Fun(rng.choice(names)), Var("es"))))
        else:
            branches = [(PCon(e, ()), App(Fun(targets[e]), Var("es"))) for e in EVENTS]
        tail = Case(Var("es"), ((PCon("Cons", ("e", "es")), Case(Var("e"), tuple(branches))),))
        defs.append((f, lams(["es"], Con("Cons", (obs, tail)))))
    return validate_restricted(Where(App(Fun(names[0]), Var("es")), tuple(defs)))


ATOMS = [
    "case s of ObsState a b: case a of {p}: True | _: False",
    "case s of ObsState a b: case b of {p}: True | _: False",
]


def random_formula(rng: random.Random, depth: int, tab: ConstructorTable):
    if depth == 0 or rng.random() < 0.25:
        text = rng.choice(ATOMS).format(p=rng.choice(PROCS))
        return Atom(parse_expr(text, tab))
    kind = rng.choice(["not", "and", "or", "implies", "G", "F", "X", "G", "F"])
    sub = lambda: random_formula(rng, depth - 1, tab)  # noqa: E731
    match kind:
        case "not":
            return Not(sub())
        case "and":
            return And(sub(), sub())
        case "or":
            return Or(sub(), sub())
        case "implies":
            return Implies(sub(), sub())
        case "G":
            return Always(sub())
        case "F":
            return Eventually(sub())
        case _:
            return Next(sub())


def _atom(rng, tab):
    return Atom(parse_expr(rng.choice(ATOMS).format(p=rng.choice(PROCS)), tab))


def random_boolean(rng: random.Random, depth: int, tab: ConstructorTable):
    """Connectives over atoms only."""
    if depth == 0 or rng.random() < 0.4:
        return _atom(rng, tab)
    sub = lambda: random_boolean(rng, depth - 1, tab)  # noqa: E731
    match rng.choice(["not", "and", "or", "implies"]):
        case "not":
            return Not(sub())
        case "and":
            return And(sub(), sub())
        case "or":
            return Or(sub(), sub())
        case _:
            return Implies(sub(), sub())


def random_exact(rng: random.Random, depth: int, tab: ConstructorTable, positive=False):
    """Formulas on which the rules coincide with all-paths LTL when F is empty.

    Negation, disjunction and implication only combine state formulas, or
    guard a formula with one; eventualities range over state formulas;
    below a next operator only positive structure is allowed, because the
    continuation there is a branching point.
    """
    if depth == 0 or rng.random() < 0.25:
        return _atom(rng, tab) if positive else random_boolean(rng, min(depth, 1), tab)
    sub = lambda pos=positive: random_exact(rng, depth - 1, tab, pos)  # noqa: E731
    kinds = ["and", "G", "F", "X"] + ([] if positive else ["guard"])
    match rng.choice(kinds):
        case "and":
            return And(sub(), sub())
        case "G":
            return Always(sub(False))
        case "F":
            return Eventually(random_boolean(rng, depth - 1, tab) if not positive
                              else _atom(rng, tab))
        case "X":
            return Next(sub(True))
        case _:
            return Implies(random_boolean(rng, 1, tab), sub())
