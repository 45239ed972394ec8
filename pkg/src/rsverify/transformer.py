"""Transformation of source programs into restricted stream form.

Driving unfolds the program symbolically over the unknown event stream.
Every unfolding of a non-closed configuration becomes a residual
function; a configuration that is a renaming of one already seen folds
into a call of that function.  Case analyses on free variables become
residual case expressions, with the matched constructor propagated into
each branch, so finite-domain state parameters are compiled away.

When a configuration homeomorphically embeds an ancestor (the whistle),
driving first tries to fold it onto an existing residual function with
the same observable behaviour up to ``fold_depth`` events; failing that,
and once ``patience`` whistles have fired on the current path, the
configuration is generalised against the ancestor and the differing
parts are let-bound.

The residual program is then tidied: single-use functions are inlined,
identical event branches collapse into a wildcard, and bisimilar
functions of a canonical stream program are merged.
"""

from __future__ import annotations

import logging
from collections import Counter, deque
from dataclasses import dataclass, field

from .core import (
    WILDCARD,
    App,
    Case,
    Con,
    Expr,
    Fun,
    FunDef,
    Lam,
    Let,
    NameSupply,
    PCon,
    RestrictedProgram,
    Var,
    Where,
    Wildcard,
    alpha_key,
    apps,
    collect_defs,
    lams,
    substitute,
    subterms,
    unapply,
    validate_restricted,
)
from .errors import (
    EvaluationError,
    NonCanonicalShape,
    NonStreamShape,
    TransformError,
    WhistleBudgetExceeded,
)
from .evaluator import DEFAULT_BUDGET, Evaluator, match_branch, step, Reduced
from .syntax import SourceFile

log = logging.getLogger(__name__)

STREAM = "$s"


@dataclass
class Node:
    name: str
    params: tuple
    config: Expr
    stream: bool
    whistled: bool = False
    body: Expr | None = None


@dataclass
class TransformResult:
    program: RestrictedProgram
    events: list = field(default_factory=list)  # (kind, detail) driving log
    raw_functions: int = 0

    def source_file(self, src: SourceFile) -> SourceFile:
        return SourceFile(src.datatypes, self.program.as_expr(), src.table)


# ---------------------------------------------------------------------------
# term utilities


def _children(e: Expr) -> list:
    match e:
        case Con(_, args):
            return list(args)
        case App(f, a):
            return [f, a]
        case Lam(_, b):
            return [b]
        case Let(_, b, body):
            return [b, body]
        case Case(s, branches):
            return [s, *(b for _, b in branches)]
        case Where(b, defs):
            return [b, *(d for _, d in defs)]
    return []


def _signature(e: Expr):
    match e:
        case Con(name, args):
            return ("c", name, len(args))
        case Fun(name):
            return ("f", name)
        case App():
            return ("@",)
        case Lam():
            return ("\\",)
        case Let():
            return ("let",)
        case Case(_, branches):
            return ("case", tuple(p.name if isinstance(p, PCon) else "_" for p, _ in branches))
        case Where(_, defs):
            return ("where", tuple(f for f, _ in defs))
    return ("v",)


def embeds(a: Expr, b: Expr) -> bool:
    """Homeomorphic embedding ``a <| b`` (variables couple with variables)."""
    if isinstance(a, Var) and isinstance(b, Var):
        return True
    sa = _signature(a)
    if sa == _signature(b) and sa != ("v",):
        if all(embeds(x, y) for x, y in zip(_children(a), _children(b))):
            return True
    return any(embeds(a, c) for c in _children(b))


def msg(a: Expr, b: Expr, supply: NameSupply, avoid: set):
    """Most specific generalisation of two first-order configurations.

    Returns ``(g, theta_a, theta_b)`` with ``g theta_a = a`` and
    ``g theta_b = b``.  Only constructor, application and call structure
    is shared; anything else that differs is abstracted whole.
    """
    theta_a: dict = {}
    theta_b: dict = {}
    pairs: dict = {}

    def go(x, y):
        if alpha_key(x) == alpha_key(y):
            return x
        if isinstance(x, Con) and isinstance(y, Con) and x.name == y.name \
                and len(x.args) == len(y.args):
            return Con(x.name, tuple(go(p, q) for p, q in zip(x.args, y.args)))
        if isinstance(x, App) and isinstance(y, App):
            return App(go(x.fun, y.fun), go(x.arg, y.arg))
        k = (alpha_key(x), alpha_key(y))
        if k not in pairs:
            v = supply.fresh("g", avoid)
            avoid.add(v)
            pairs[k] = v
            theta_a[v] = x
            theta_b[v] = y
        return Var(pairs[k])

    g = go(a, b)
    return g, theta_a, theta_b


def _decompose(e: Expr):
    """Split ``e`` into evaluation-context frames (outermost first) and focus."""
    frames = []
    while True:
        match e:
            case App(f, a) if not isinstance(f, Lam):
                frames.append(("app", a, e.loc))
                e = f
            case Case(s, branches, loc) if not isinstance(s, (Con, Lam)):
                frames.append(("case", branches, loc))
                e = s
            case _:
                return frames, e


def _plug(frames, e: Expr) -> Expr:
    for frame in reversed(frames):
        if frame[0] == "app":
            e = App(e, frame[1], frame[2])
        else:
            e = Case(e, frame[1], frame[2])
    return e


# ---------------------------------------------------------------------------


class Transformer:
    def __init__(self, src: SourceFile, max_functions: int = 400, fold_depth: int = 12,
                 patience: int = 4, budget: int = DEFAULT_BUDGET, event_type: str = "Event"):
        self.src = src
        self.table = src.table
        self.env = collect_defs(src.main)
        self.max_functions = max_functions
        self.fold_depth = fold_depth
        self.patience = patience
        self.budget = budget
        self.events = src.table.constructors(event_type)
        self.supply = NameSupply()
        self.nodes: dict = {}
        self.memo: dict = {}
        self.log: list = []

    # -- entry point
    def run(self) -> TransformResult:
        main = self.src.main
        while isinstance(main, Where):
            main = main.body
        free = sorted(main.fv)
        if len(free) != 1:
            raise NonStreamShape(f"main expression must have exactly one free variable "
                                 f"(the event stream), found {free or 'none'}")
        top = self.drive(main, (), True)
        raw = len(self.nodes)
        defs = {n.name: FunDef(n.params, n.body) for n in self.nodes.values()}
        top, defs = _inline(top, defs)
        defs = {f: FunDef(d.params, _merge_wildcards(d.body)) for f, d in defs.items()}
        top, defs = _minimise(top, defs, self.events)
        top, defs = _rename(top, defs)
        expr = Where(top, tuple((f, lams(d.params, d.body)) for f, d in defs.items()))
        program = validate_restricted(expr)
        return TransformResult(program, self.log, raw)

    # -- driving
    def drive(self, c: Expr, path: tuple, stream: bool) -> Expr:
        while True:
            frames, focus = _decompose(c)
            match focus:
                case Var(x):
                    return self._drive_stuck(x, frames, focus, path, stream)
                case Con(name, args) if not frames:
                    if stream and name != "Cons":
                        raise NonStreamShape(f"expected a stream cell, got constructor {name}")
                    out = []
                    for i, a in enumerate(args):
                        out.append(self._drive_data(a, path, stream and name == "Cons" and i == 1))
                    return Con(name, tuple(out))
                case Lam(x, body) if not frames:
                    if stream:
                        raise NonStreamShape("expected a stream cell, got a lambda")
                    return Lam(x, self.drive(body, path, False))
                case Fun(name):
                    if name not in self.env:
                        raise TransformError(f"call to undefined function {name}")
                    k = self._closed_scrutinee(frames, focus)
                    if k is not None:
                        c = k
                        continue
                    if not c.fv and not stream:
                        return self._ground(c)
                    return self._call_node(c, path, stream)
                case _:
                    c = self._reduce(frames, focus)

    def _drive_data(self, a: Expr, path, stream) -> Expr:
        if not a.fv and not stream:
            return self._ground(a)
        return self.drive(a, path, stream)

    def _ground(self, e: Expr) -> Expr:
        try:
            return Evaluator(self.env, self.budget).ground(e)
        except EvaluationError as exc:
            raise TransformError(f"closed subterm failed to evaluate: {exc}") from exc

    def _reduce(self, frames, focus) -> Expr:
        r = step(focus, self.env)
        if isinstance(r, Reduced):
            return _plug(frames, r.next)
        if frames and frames[-1][0] == "case" and isinstance(focus, Con):
            chosen = match_branch(focus, frames[-1][1])
            if chosen is None:
                raise TransformError(f"no branch matches constructor {focus.name}")
            return _plug(frames[:-1], chosen)
        raise TransformError(f"cannot drive {type(focus).__name__} in this context")

    def _closed_scrutinee(self, frames, focus):
        """Evaluate the innermost case scrutinee outright when it is closed."""
        for i in range(len(frames) - 1, -1, -1):
            if frames[i][0] == "case":
                scrut = _plug(frames[i + 1:], focus)
                if scrut.fv:
                    return None
                try:
                    v = Evaluator(self.env, self.budget).whnf(scrut)
                except EvaluationError as exc:
                    raise TransformError(f"closed scrutinee failed to evaluate: {exc}") from exc
                return _plug(frames[:i + 1], v)
        return None

    def _drive_stuck(self, x, frames, focus, path, stream) -> Expr:
        if frames and frames[-1][0] == "case":
            branches = frames[-1][1]
            outer = frames[:-1]
            out = []
            for pat, body in branches:
                if isinstance(pat, PCon):
                    avoid = set(body.fv) | {x}
                    fresh = []
                    for v in pat.vars:
                        n = self.supply.fresh(v, avoid)
                        avoid.add(n)
                        fresh.append(n)
                    body = substitute(body, {v: Var(n) for v, n in zip(pat.vars, fresh)})
                    value = Con(pat.name, tuple(Var(n) for n in fresh))
                    branch = substitute(_plug(outer, body), (x, value))
                    out.append((PCon(pat.name, tuple(fresh)), self.drive(branch, path, stream)))
                else:
                    out.append((WILDCARD, self.drive(_plug(outer, body), path, stream)))
            return Case(Var(x), tuple(out))
        args = []
        while frames and frames[-1][0] == "app":
            args.append(frames.pop()[1])
        if frames:
            raise TransformError(f"cannot residualise a case on an application of {x}")
        return apps(focus, *(self._drive_data(a, path, False) for a in args))

    # -- residual functions
    def _normalise_call(self, c: Expr) -> Expr:
        head, args = unapply(c)
        if not isinstance(head, Fun):
            return c
        out = []
        for a in args:
            if not a.fv:
                try:
                    a = Evaluator(self.env, self.budget).ground(a)
                except EvaluationError:
                    pass
            out.append(a)
        return apps(head, *out)

    def _call_node(self, c: Expr, path: tuple, stream: bool) -> Expr:
        c = self._normalise_call(c)
        order: list = []
        key = (stream, alpha_key(c, order))
        if key in self.memo:
            return apps(Fun(self.memo[key]), *(Var(v) for v in order))
        head = _decompose(c)[1]
        ancestor = next((n for n in reversed(path)
                         if n.stream == stream and _decompose(n.config)[1] == head
                         and embeds(n.config, c)), None)
        whistled = ancestor is not None
        if whistled:
            self.log.append(("whistle", f"{ancestor.name}"))
            target = self._behavioural_fold(c, order, path, stream)
            if target is not None:
                self.log.append(("semantic-fold", target.name))
                return apps(Fun(target.name), *(Var(v) for v in order))
            if sum(n.whistled for n in path) >= self.patience:
                g = self._generalise(ancestor, c, path, stream)
                if g is not None:
                    return g
        if len(self.nodes) >= self.max_functions:
            raise WhistleBudgetExceeded(
                f"driving produced more than {self.max_functions} residual functions")
        node = Node(f"h{len(self.nodes) + 1}", tuple(order), c, stream, whistled)
        self.nodes[node.name] = node
        self.memo[key] = node.name
        r = step(c, self.env)
        assert isinstance(r, Reduced) and r.rule == "fun"
        node.body = self.drive(r.next, path + (node,), stream)
        return apps(Fun(node.name), *(Var(v) for v in order))

    def _generalise(self, ancestor: Node, c: Expr, path, stream):
        avoid = set(c.fv) | set(ancestor.config.fv)
        g, _, theta = msg(ancestor.config, c, self.supply, avoid)
        if isinstance(g, Var) or not theta:
            return None
        self.log.append(("generalise", ancestor.name))
        body = self.drive(g, path, stream)
        for v in reversed(list(theta)):
            if isinstance(theta[v], Var):
                body = substitute(body, (v, theta[v]))
            else:
                body = Let(v, self._drive_data(theta[v], path, False), body)
        return body

    # -- folding up to observable behaviour
    def _behavioural_fold(self, c: Expr, order: list, path, stream):
        if not stream or len(order) != 1 or not self.events:
            return None
        x = substitute(c, (order[0], Var(STREAM)))
        ancestors = [n for n in reversed(path)]
        others = [n for n in self.nodes.values() if n not in ancestors]
        for n in ancestors + others:
            if n.stream and len(n.params) == 1:
                y = substitute(n.config, (n.params[0], Var(STREAM)))
                if self._equivalent(x, y):
                    return n
        return None

    def _observe(self, x: Expr):
        ev = Evaluator(self.env, self.budget)
        cell = ev.whnf(x)
        if not (isinstance(cell, Con) and cell.name == "Cons"):
            raise NonStreamShape("configuration does not produce a stream cell")
        return ev.ground(cell.args[0]), cell.args[1]

    def _equivalent(self, x: Expr, y: Expr) -> bool:
        seen = set()
        queue = deque([(x, y, 0)])
        while queue:
            a, b, depth = queue.popleft()
            k = (alpha_key(a), alpha_key(b))
            if k in seen:
                continue
            seen.add(k)
            try:
                oa, ta = self._observe(a)
                ob, tb = self._observe(b)
            except (EvaluationError, NonStreamShape):
                return False
            if alpha_key(oa) != alpha_key(ob):
                return False
            if depth >= self.fold_depth:
                continue
            for e in self.events:
                cell = Con("Cons", (Con(e), Var(STREAM)))
                queue.append((substitute(ta, (STREAM, cell)),
                               substitute(tb, (STREAM, cell)), depth + 1))
        return True


def transform(src: SourceFile, **options) -> RestrictedProgram:
    return Transformer(src, **options).run().program


# ---------------------------------------------------------------------------
# residual clean-up


def _calls(e: Expr) -> Counter:
    return Counter(t.name for t in subterms(e) if isinstance(t, Fun))


def _instantiate(d: FunDef, args) -> Expr:
    return substitute(d.body, dict(zip(d.params, args)))


def _replace_calls(e: Expr, f: str, d: FunDef) -> Expr:
    """Replace every saturated call of ``f`` in ``e`` by its body."""
    head, args = unapply(e)
    if isinstance(head, Fun) and head.name == f and len(args) == len(d.params):
        return _instantiate(d, args)
    match e:
        case Con(n, xs):
            return Con(n, tuple(_replace_calls(a, f, d) for a in xs))
        case App(g, a):
            return App(_replace_calls(g, f, d), _replace_calls(a, f, d))
        case Lam(x, b):
            return Lam(x, _replace_calls(b, f, d))
        case Let(x, b, body):
            return Let(x, _replace_calls(b, f, d), _replace_calls(body, f, d))
        case Case(s, branches):
            return Case(_replace_calls(s, f, d),
                        tuple((p, _replace_calls(b, f, d)) for p, b in branches))
    return e


def _inline(top: Expr, defs: dict):
    changed = True
    while changed:
        changed = False
        counts = _calls(top)
        for d in defs.values():
            counts.update(_calls(d.body))
        for f, d in list(defs.items()):
            head, args = unapply(d.body)
            forwarder = isinstance(head, Fun) and head.name != f
            if f in _calls(d.body):
                continue
            if counts[f] == 1 or forwarder or counts[f] == 0:
                del defs[f]
                top = _replace_calls(top, f, d)
                for g in defs:
                    defs[g] = FunDef(defs[g].params, _replace_calls(defs[g].body, f, d))
                changed = True
                break
    return top, defs


def _merge_wildcards(e: Expr) -> Expr:
    match e:
        case Con(n, xs):
            return Con(n, tuple(_merge_wildcards(a) for a in xs))
        case App(g, a):
            return App(_merge_wildcards(g), _merge_wildcards(a))
        case Lam(x, b):
            return Lam(x, _merge_wildcards(b))
        case Let(x, b, body):
            return Let(x, _merge_wildcards(b), _merge_wildcards(body))
        case Case(s, branches):
            branches = [(p, _merge_wildcards(b)) for p, b in branches]
            if all(isinstance(p, Wildcard) or not p.vars for p, _ in branches):
                keys = [alpha_key(b) for _, b in branches]
                common, n = Counter(keys).most_common(1)[0]
                has_wild = isinstance(branches[-1][0], Wildcard)
                if n >= 2 or (has_wild and n >= 1 and keys[-1] == common):
                    body = branches[keys.index(common)][1]
                    kept = [(p, b) for (p, b), k in zip(branches, keys) if k != common]
                    branches = kept + [(WILDCARD, body)]
            return Case(s, tuple(branches))
    return e


def _canonical(defs: dict, events: list):
    """Observation and per-event successor of every function, or None."""
    from .lts import _canonical_body
    info = {}
    for f, d in defs.items():
        try:
            obs, table, default = _canonical_body(f, d.params, d.body)
        except NonCanonicalShape:
            return None
        succ = {e: table.get(e, default) for e in events}
        if None in succ.values():
            return None
        info[f] = (alpha_key(obs), succ)
    return info


def _minimise(top: Expr, defs: dict, events: list):
    """Merge bisimilar functions of a canonical stream program."""
    info = _canonical(defs, events) if events else None
    if info is None:
        return top, defs
    names = list(defs)
    block = {f: info[f][0] for f in names}
    while True:
        sig = {f: (block[f], tuple(block[info[f][1][e]] for e in events)) for f in names}
        ids: dict = {}
        new = {f: ids.setdefault(sig[f], len(ids)) for f in names}
        if len(set(new.values())) == len(set(block.values())):
            block = new
            break
        block = new
    rep = {}
    for f in names:
        rep.setdefault(block[f], f)
    mapping = {f: rep[block[f]] for f in names}
    if all(mapping[f] == f for f in names):
        return top, defs
    top = _rename_calls(top, mapping)
    defs = {f: FunDef(d.params, _merge_wildcards(_rename_calls(d.body, mapping)))
            for f, d in defs.items() if mapping[f] == f}
    return top, defs


def _rename_calls(e: Expr, mapping: dict) -> Expr:
    match e:
        case Fun(n):
            return Fun(mapping.get(n, n))
        case Con(n, xs):
            return Con(n, tuple(_rename_calls(a, mapping) for a in xs))
        case App(g, a):
            return App(_rename_calls(g, mapping), _rename_calls(a, mapping))
        case Lam(x, b):
            return Lam(x, _rename_calls(b, mapping))
        case Let(x, b, body):
            return Let(x, _rename_calls(b, mapping), _rename_calls(body, mapping))
        case Case(s, branches):
            return Case(_rename_calls(s, mapping),
                        tuple((p, _rename_calls(b, mapping)) for p, b in branches))
    return e


def _rename(top: Expr, defs: dict):
    """Number functions f1, f2, ... in breadth-first order of first call."""
    order = []
    queue = deque([top])
    while queue:
        e = queue.popleft()
        for t in subterms(e):
            if isinstance(t, Fun) and t.name in defs and t.name not in order:
                order.append(t.name)
                queue.append(defs[t.name].body)
    mapping = {f: f"f{i + 1}" for i, f in enumerate(order)}
    top = _rename_calls(top, mapping)
    new = {}
    for f in order:
        d = defs[f]
        new[mapping[f]] = FunDef(d.params, _rename_calls(d.body, mapping))
    return top, _tidy_names(new)


def _tidy_names(defs: dict) -> dict:
    """Strip fresh-name suffixes where doing so cannot capture."""
    out = {}
    for f, d in defs.items():
        supply = NameSupply()
        params = tuple(p.split("$")[0] if "$" in p else p for p in d.params)
        if len(set(params)) != len(params):
            out[f] = d
            continue
        body = substitute(d.body, {p: Var(q) for p, q in zip(d.params, params) if p != q},
                          supply)
        out[f] = FunDef(params, _tidy_binders(body))
    return out


def _tidy_binders(e: Expr) -> Expr:
    match e:
        case Case(s, branches):
            out = []
            for p, b in branches:
                if isinstance(p, PCon) and p.vars:
                    new_vars = []
                    for v in p.vars:
                        base = v.split("$")[0]
                        # reuse the base name when it is not otherwise free in b
                        if base != v and base not in b.fv and base not in new_vars:
                            b = substitute(b, (v, Var(base)))
                            new_vars.append(base)
                        else:
                            new_vars.append(v)
                    p = PCon(p.name, tuple(new_vars))
                out.append((p, _tidy_binders(b)))
            return Case(_tidy_binders(s), tuple(out))
        case Con(n, xs):
            return Con(n, tuple(_tidy_binders(a) for a in xs))
        case Let(x, b, body):
            return Let(x, _tidy_binders(b), _tidy_binders(body))
        case App(g, a):
            return App(_tidy_binders(g), _tidy_binders(a))
        case Lam(x, b):
            return Lam(x, _tidy_binders(b))
    return e


# ---------------------------------------------------------------------------
# bounded bisimulation against the source


@dataclass
class BisimResult:
    ok: bool
    trials: int
    depth: int
    counterexample: list | None = None  # event names of the failing stream
    position: int | None = None


def _entry(e: Expr):
    defs = collect_defs(e)
    while isinstance(e, Where):
        e = e.body
    free = sorted(e.fv)
    if len(free) != 1:
        raise NonStreamShape(f"expected exactly one free stream variable, found {free}")
    return e, free[0], defs


def observations(e: Expr, events: list, budget: int = DEFAULT_BUDGET) -> list:
    """Observations of program ``e`` on a stream starting with ``events``.

    The stream ends in a free variable, so only the first
    ``len(events) + 1`` observations are defined.
    """
    main, var, defs = _entry(e)
    stream: Expr = Var(STREAM)
    for ev in reversed(events):
        stream = Con("Cons", (Con(ev), stream))
    cur = substitute(main, (var, stream))
    ev_ = Evaluator(defs, budget)
    out = []
    for _ in range(len(events) + 1):
        cell = ev_.whnf(cur)
        if not (isinstance(cell, Con) and cell.name == "Cons"):
            raise NonStreamShape("program did not produce a stream cell")
        out.append(ev_.ground(cell.args[0]))
        cur = cell.args[1]
    return out


def bounded_bisim(source: SourceFile, restricted: RestrictedProgram, depth: int = 20,
                  trials: int = 200, seed: int = 0, event_type: str = "Event") -> BisimResult:
    """Compare observations of both programs on ``trials`` random streams."""
    import random

    rng = random.Random(seed)
    events = source.table.constructors(event_type)
    if not events:
        raise NonStreamShape(f"no {event_type} datatype declared")
    for _ in range(trials):
        stream = [rng.choice(events) for _ in range(depth)]
        a = observations(source.main, stream)
        b = observations(restricted.as_expr(), stream)
        for i, (x, y) in enumerate(zip(a, b)):
            if alpha_key(x) != alpha_key(y):
                return BisimResult(False, trials, depth, stream, i)
    return BisimResult(True, trials, depth)
