"""Finite transition systems read off restricted programs, and an
explicit-state LTL checker over them used as an independent oracle.

The oracle builds the product of the transition system with the
closure of the negated formula (one boolean per temporal subformula)
and searches for a reachable strongly connected component that fulfils
every eventuality and takes every fair event.  Such a component exists
iff some fair path violates the formula.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

from .core import (
    Case,
    Con,
    ConstructorTable,
    Fun,
    PCon,
    RestrictedProgram,
    Var,
    Wildcard,
    alpha_key,
    unapply,
)
from .errors import AtomUndefinedOnState, EvaluationStuck, NonCanonicalShape
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
    subformulas,
    subst_state,
)
from .syntax import pretty_expr

WILDCARD = "_"


@dataclass
class Lts:
    states: list  # function names, in program order
    initial: str
    observe: dict  # state -> observable-state Expr
    transitions: set  # (state, event or WILDCARD, state)
    events: list  # declared event constructors

    def successor(self, state: str, event: str) -> str:
        table = self.__dict__.get("_succ")
        if table is None or table[0] is not self.transitions or table[1] != len(self.transitions):
            explicit = {(s, ev): t for s, ev, t in self.transitions if ev != WILDCARD}
            default = {s: t for s, ev, t in self.transitions if ev == WILDCARD}
            table = (self.transitions, len(self.transitions), explicit, default)
            self.__dict__["_succ"] = table
        try:
            return table[2][(state, event)]
        except KeyError:
            return table[3][state]

    def expanded(self) -> set:
        """Transitions with every wildcard replaced by the events it covers."""
        out = set()
        for state in self.states:
            for ev in self.events:
                out.add((state, ev, self.successor(state, ev)))
        return out

    def run(self, events) -> list:
        """Observable states emitted along an event sequence (len + 1 of them)."""
        s = self.initial
        obs = [self.observe[s]]
        for ev in events:
            s = self.successor(s, ev)
            obs.append(self.observe[s])
        return obs


def _canonical_body(f: str, params, body) -> tuple:
    """Split a canonical body into (observation, {event: target}, default)."""
    if len(params) != 1:
        raise NonCanonicalShape(f"{f}: expected exactly one (stream) parameter")
    es = params[0]
    if not (isinstance(body, Con) and body.name == "Cons" and len(body.args) == 2):
        raise NonCanonicalShape(f"{f}: body is not a Cons cell")
    obs, rest = body.args
    if not (isinstance(rest, Case) and rest.scrutinee == Var(es) and len(rest.branches) == 1):
        raise NonCanonicalShape(f"{f}: tail is not a case on the stream")
    pat, inner = rest.branches[0]
    if not (isinstance(pat, PCon) and pat.name == "Cons" and len(pat.vars) == 2):
        raise NonCanonicalShape(f"{f}: stream case does not match Cons e es")
    ev_var, es2 = pat.vars

    def target(e):
        head, args = unapply(e)
        if isinstance(head, Fun) and len(args) == 1 and args[0] == Var(es2):
            return head.name
        raise NonCanonicalShape(f"{f}: branch is not a call on the remaining stream")

    if isinstance(inner, Case) and inner.scrutinee == Var(ev_var):
        table = {}
        default = None
        for p, b in inner.branches:
            if isinstance(p, Wildcard):
                default = target(b)
            elif p.vars:
                raise NonCanonicalShape(f"{f}: event pattern binds variables")
            else:
                table[p.name] = target(b)
        return obs, table, default
    return obs, {}, target(inner)


def event_constructors(table: ConstructorTable, datatype: str = "Event") -> list:
    events = table.constructors(datatype)
    if not events:
        raise NonCanonicalShape(f"no {datatype} datatype declared")
    return events


def extract_lts(p: RestrictedProgram, table: ConstructorTable, datatype: str = "Event") -> Lts:
    events = event_constructors(table, datatype)
    head, args = unapply(p.entry)
    if not (isinstance(head, Fun) and len(args) == 1 and isinstance(args[0], Var)):
        raise NonCanonicalShape("top expression is not a call on the event stream")
    transitions = set()
    observe = {}
    for f, d in p.defs.items():
        obs, table_, default = _canonical_body(f, d.params, d.body)
        ev = Evaluator({}, DEFAULT_BUDGET)
        try:
            observe[f] = ev.ground(obs)
        except EvaluationStuck:
            # abstracted components stay symbolic
            observe[f] = obs
        for e, tgt in table_.items():
            transitions.add((f, e, tgt))
        if default is not None and set(table_) != set(events):
            transitions.add((f, WILDCARD, default))
        missing = [e for e in events if e not in table_] if default is None else []
        if missing:
            raise NonCanonicalShape(f"{f}: no transition for {', '.join(missing)}")
    return Lts(list(p.defs), head.name, observe, transitions, events)


def _state_label(lts: Lts, s: str) -> str:
    return f"{s}\\n{pretty_expr(lts.observe[s])}"


def export_dot(lts: Lts, include_self_loops: bool = False) -> str:
    lines = ["digraph lts {", "  rankdir=TB;", '  __start [shape=point, label=""];']
    for s in lts.states:
        lines.append(f'  "{s}" [shape=box, label="{_state_label(lts, s)}"];')
    lines.append(f'  __start -> "{lts.initial}";')
    edges: dict = {}
    for s, ev, t in sorted(lts.expanded()):
        if s == t and not include_self_loops:
            continue
        edges.setdefault((s, t), []).append(ev)
    for (s, t), evs in sorted(edges.items(), key=lambda kv: (lts.states.index(kv[0][0]),
                                                          lts.states.index(kv[0][1]))):
        for ev in sorted(evs, key=lts.events.index):
            lines.append(f'  "{s}" -> "{t}" [label="{ev}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def isomorphic(a: Lts, b: Lts) -> bool:
    """Label- and observation-preserving isomorphism of the reachable parts."""
    if sorted(a.events) != sorted(b.events):
        return False
    mapping = {a.initial: b.initial}
    queue = deque([a.initial])
    while queue:
        s = queue.popleft()
        t = mapping[s]
        if alpha_key(a.observe[s]) != alpha_key(b.observe[t]):
            return False
        for ev in a.events:
            s2, t2 = a.successor(s, ev), b.successor(t, ev)
            if s2 in mapping:
                if mapping[s2] != t2:
                    return False
            else:
                if t2 in mapping.values():
                    return False
                mapping[s2] = t2
                queue.append(s2)
    return len(mapping) == len(reachable(a)) and len(set(mapping.values())) == len(reachable(b))


def reachable(lts: Lts) -> set:
    seen = {lts.initial}
    queue = deque([lts.initial])
    while queue:
        s = queue.popleft()
        for ev in lts.events:
            t = lts.successor(s, ev)
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return seen


# ---------------------------------------------------------------------------
# oracle


@dataclass
class OracleVerdict:
    holds: bool
    witness: tuple | None = None  # (prefix events, cycle events)


def atom_values(lts: Lts, atoms, prop_env: dict | None = None,
                budget: int = DEFAULT_BUDGET) -> dict:
    """Truth of every atomic proposition in every state: {(state, atom): bool}."""
    out = {}
    for s in lts.states:
        for a in atoms:
            ev = Evaluator(prop_env or {}, budget)
            try:
                v = ev.whnf(subst_state(a.prop, lts.observe[s]))
            except EvaluationStuck as exc:
                if exc.reason in (StuckKind.FREE_VARIABLE, StuckKind.FREE_VARIABLE_HEAD,
                                  StuckKind.FREE_VARIABLE_SCRUTINEE):
                    raise AtomUndefinedOnState(
                        f"{a} depends on an abstracted component of state {s}") from exc
                raise
            if not (isinstance(v, Con) and v.name in ("True", "False")):
                raise AtomUndefinedOnState(f"{a} does not evaluate to True/False in state {s}")
            out[(s, a)] = v.name == "True"
    return out


class _Closure:
    """Truth of subformulas given a state's atom values and the chosen
    values of the temporal subformulas (the 'elementary' ones)."""

    def __init__(self, phi: Formula):
        self.subs = subformulas(phi)
        self.temporal = [g for g in self.subs if isinstance(g, (Always, Eventually, Next))]
        self.atoms = [g for g in self.subs if isinstance(g, Atom)]
        self.index = {g: i for i, g in enumerate(self.temporal)}

    def value(self, g: Formula, state: str, bits: tuple, atomv: dict) -> bool:
        match g:
            case Atom():
                return atomv[(state, g)]
            case Not(a):
                return not self.value(a, state, bits, atomv)
            case And(a, b):
                return self.value(a, state, bits, atomv) and self.value(b, state, bits, atomv)
            case Or(a, b):
                return self.value(a, state, bits, atomv) or self.value(b, state, bits, atomv)
            case Implies(a, b):
                return (not self.value(a, state, bits, atomv)) or self.value(b, state, bits, atomv)
            case _:
                return bits[self.index[g]]


def oracle_check(lts: Lts, phi: Formula, fairness: FairnessSet,
                 prop_env: dict | None = None) -> OracleVerdict:
    cl = _Closure(phi)
    atomv = atom_values(lts, cl.atoms, prop_env)
    n = len(cl.temporal)
    all_bits = list(itertools.product((False, True), repeat=n))

    # consistency of a node (state, bits) with its successor (state2, bits2)
    def consistent(s, bits, s2, bits2) -> bool:
        for g, i in cl.index.items():
            now = bits[i]
            match g:
                case Next(a):
                    if now != cl.value(a, s2, bits2, atomv):
                        return False
                case Always(a):
                    if now != (cl.value(a, s, bits, atomv) and bits2[i]):
                        return False
                case Eventually(a):
                    if now != (cl.value(a, s, bits, atomv) or bits2[i]):
                        return False
        return True

    # acceptance sets: eventualities must be fulfilled infinitely often
    accept = []
    for g, i in cl.index.items():
        if isinstance(g, Eventually):
            accept.append(lambda s, bits, g=g, i=i: (not bits[i]) or cl.value(g.arg, s, bits, atomv))
        elif isinstance(g, Always):
            accept.append(lambda s, bits, g=g, i=i: bits[i] or not cl.value(g.arg, s, bits, atomv))

    succ_cache: dict = {}

    def successors(node):
        if node not in succ_cache:
            s, bits = node
            out = []
            for ev in lts.events:
                s2 = lts.successor(s, ev)
                for bits2 in all_bits:
                    if consistent(s, bits, s2, bits2):
                        out.append((ev, (s2, bits2)))
            succ_cache[node] = out
        return succ_cache[node]

    init = [(lts.initial, b) for b in all_bits if not cl.value(phi, lts.initial, b, atomv)]
    # reachable product graph
    parent: dict = {}
    order = []
    queue = deque()
    for node in init:
        parent[node] = None
        queue.append(node)
    while queue:
        node = queue.popleft()
        order.append(node)
        for ev, nxt in successors(node):
            if nxt not in parent:
                parent[nxt] = (node, ev)
                queue.append(nxt)

    # among the fair accepting components, enter the one whose first
    # accepting node is closest to the start, so the prefix ends there
    depth = {node: i for i, node in enumerate(order)}
    best = None
    for comp in _sccs(order, successors):
        comp_set = set(comp)
        internal = [(u, ev, v) for u in comp for ev, v in successors(u) if v in comp_set]
        if not internal:
            continue
        if not fairness.events <= {ev for _, ev, _ in internal}:
            continue
        targets = []
        for acc in accept:
            hits = [u for u in comp if acc(*u)]
            if not hits:
                break
            targets.append(min(hits, key=depth.__getitem__))
        else:
            entry = targets[0] if targets else min(comp, key=depth.__getitem__)
            if best is None or depth[entry] < depth[best[0]]:
                best = (entry, comp_set, internal, targets)
    if best is None:
        return OracleVerdict(True)
    return OracleVerdict(False, _witness(*best, fairness, parent, successors))


def _sccs(nodes, successors):
    """Tarjan's algorithm, iterative."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out = []
    counter = itertools.count()
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(successors(root)))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for _, w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def _path_within(src, goal, comp_set, successors):
    """Shortest non-empty event path inside the component from src to goal."""
    prev: dict = {}
    queue: deque = deque()
    for ev, v in successors(src):
        if v in comp_set and v not in prev:
            prev[v] = (None, ev)
            queue.append(v)
    while queue:
        u = queue.popleft()
        if u == goal:
            path = []
            while True:
                p, ev = prev[u]
                path.append(ev)
                if p is None:
                    return path[::-1]
                u = p
        for ev, v in successors(u):
            if v in comp_set and v not in prev:
                prev[v] = (u, ev)
                queue.append(v)
    raise AssertionError("component is not strongly connected")


def _witness(entry, comp_set, internal, targets, fairness, parent, successors):
    prefix = []
    u = entry
    while parent[u] is not None:
        u0, ev = parent[u]
        prefix.append(ev)
        u = u0
    prefix.reverse()

    cycle = []
    cur = entry
    # visit every accepting target
    for tgt in targets:
        if tgt != cur:
            cycle.extend(_path_within(cur, tgt, comp_set, successors))
            cur = tgt
    # take every fair event at least once
    for ev_needed in sorted(fairness.events):
        if ev_needed in cycle:
            continue
        src = next(u for u, ev, v in internal if ev == ev_needed)
        if src != cur:
            cycle.extend(_path_within(cur, src, comp_set, successors))
        nxt = next(v for u, ev, v in internal if u == src and ev == ev_needed)
        cycle.append(ev_needed)
        cur = nxt
    # close the loop
    if cur != entry or not cycle:
        cycle.extend(_path_within(cur, entry, comp_set, successors))
    return prefix, cycle


# ---------------------------------------------------------------------------
# direct evaluation on a lasso (independent of the product construction)


def holds_on_lasso(lts: Lts, phi: Formula, prefix, cycle, prop_env: dict | None = None) -> bool:
    """Evaluate ``phi`` on the ultimately periodic run prefix.cycle^omega."""
    states = [lts.initial]
    for ev in list(prefix) + list(cycle):
        states.append(lts.successor(states[-1], ev))
    if states[-1] != states[len(prefix)]:
        raise ValueError("cycle does not return to its starting state")
    n = len(states) - 1  # positions 0..n-1; position n is position len(prefix)
    loop = len(prefix)
    nxt = [i + 1 if i + 1 < n else loop for i in range(n)]
    atoms = [g for g in subformulas(phi) if isinstance(g, Atom)]
    atomv = atom_values(lts, atoms, prop_env)
    memo: dict = {}

    def reach(i):
        seen = []
        j = i
        while j not in seen:
            seen.append(j)
            j = nxt[j]
        return seen

    def val(g, i) -> bool:
        key = (g, i)
        if key in memo:
            return memo[key]
        match g:
            case Atom():
                r = atomv[(states[i], g)]
            case Not(a):
                r = not val(a, i)
            case And(a, b):
                r = val(a, i) and val(b, i)
            case Or(a, b):
                r = val(a, i) or val(b, i)
            case Implies(a, b):
                r = (not val(a, i)) or val(b, i)
            case Next(a):
                r = val(a, nxt[i])
            case Always(a):
                r = all(val(a, j) for j in reach(i))
            case Eventually(a):
                r = any(val(a, j) for j in reach(i))
        memo[key] = r
        return r

    return val(phi, 0)
