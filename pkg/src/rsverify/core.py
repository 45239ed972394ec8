"""Abstract syntax of the reactive-system language.

Terms are immutable dataclasses.  Every node caches its set of free
variables on construction, which keeps substitution cheap during
evaluation and driving.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

from .errors import (
    ArityMismatch,
    DuplicateDefinition,
    LetBoundScrutinee,
    NonVariableCallArgument,
    NonVariableScrutinee,
    RestrictedFormError,
    UndeclaredConstructor,
    UnsaturatedCall,
)

Loc = tuple  # (line, column)


def _fv_union(items: Iterable[frozenset]) -> frozenset:
    out: frozenset = frozenset()
    for s in items:
        if s:
            out = out | s
    return out


@dataclass(frozen=True)
class Var:
    name: str
    loc: Loc | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", frozenset((self.name,)))


@dataclass(frozen=True)
class Con:
    name: str
    args: tuple = ()
    loc: Loc | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "fv", _fv_union(a.fv for a in self.args))


@dataclass(frozen=True)
class Lam:
    param: str
    body: "Expr"
    loc: Loc | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.body.fv - {self.param})


@dataclass(frozen=True)
class Fun:
    name: str
    loc: Loc | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", frozenset())


@dataclass(frozen=True)
class App:
    fun: "Expr"
    arg: "Expr"
    loc: Loc | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.fun.fv | self.arg.fv)


@dataclass(frozen=True)
class PCon:
    """Constructor pattern ``c x1 ... xn`` (never nested)."""

    name: str
    vars: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))


@dataclass(frozen=True)
class Wildcard:
    pass


Pattern = Union[PCon, Wildcard]
WILDCARD = Wildcard()


def pattern_vars(p: Pattern) -> tuple:
    return p.vars if isinstance(p, PCon) else ()


@dataclass(frozen=True)
class Case:
    scrutinee: "Expr"
    branches: tuple  # of (Pattern, Expr)
    loc: Loc | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        branches = tuple((p, e) for p, e in self.branches)
        object.__setattr__(self, "branches", branches)
        fv = self.scrutinee.fv
        for p, e in branches:
            fv = fv | (e.fv - set(pattern_vars(p)))
        object.__setattr__(self, "fv", fv)


@dataclass(frozen=True)
class Let:
    binder: str
    bound: "Expr"
    body: "Expr"
    loc: Loc | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fv", self.bound.fv | (self.body.fv - {self.binder}))


@dataclass(frozen=True)
class Where:
    body: "Expr"
    defs: tuple  # of (function name, Expr)
    loc: Loc | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        defs = tuple((f, e) for f, e in self.defs)
        object.__setattr__(self, "defs", defs)
        object.__setattr__(self, "fv", _fv_union([self.body.fv, *(e.fv for _, e in defs)]))


Expr = Union[Var, Con, Lam, Fun, App, Case, Let, Where]


# ---------------------------------------------------------------------------
# small constructors / destructors


def apps(head: Expr, *args: Expr) -> Expr:
    for a in args:
        head = App(head, a)
    return head


def lams(params: Iterable[str], body: Expr) -> Expr:
    for p in reversed(tuple(params)):
        body = Lam(p, body)
    return body


def unapply(e: Expr) -> tuple[Expr, list]:
    """Split ``h a1 ... an`` into ``(h, [a1, ..., an])``."""
    args = []
    while isinstance(e, App):
        args.append(e.arg)
        e = e.fun
    args.reverse()
    return e, args


def unlam(e: Expr) -> tuple[list, Expr]:
    params = []
    while isinstance(e, Lam):
        params.append(e.param)
        e = e.body
    return params, e


def free_vars(e: Expr) -> frozenset:
    return e.fv


# ---------------------------------------------------------------------------
# fresh names and substitution

_SUFFIX = re.compile(r"\$\d+$")


class NameSupply:
    """Counter-based fresh names of the form ``x$1``, ``x$2``, ..."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)

    def fresh(self, base: str, avoid: frozenset | set = frozenset()) -> str:
        stem = _SUFFIX.sub("", base)
        while True:
            name = f"{stem}${next(self._counter)}"
            if name not in avoid:
                return name


_global_supply = NameSupply()


def substitute(e: Expr, binding: tuple[str, Expr] | Mapping[str, Expr],
               supply: NameSupply | None = None) -> Expr:
    """Capture-avoiding substitution of one or several variables."""
    subst = dict([binding]) if isinstance(binding, tuple) else dict(binding)
    return _subst(e, subst, supply or _global_supply)


def _subst(e: Expr, s: dict, supply: NameSupply) -> Expr:
    s = {k: v for k, v in s.items() if k in e.fv}
    if not s:
        return e
    match e:
        case Var(name):
            return s[name]
        case Con(name, args):
            return Con(name, tuple(_subst(a, s, supply) for a in args), e.loc)
        case App(f, a):
            return App(_subst(f, s, supply), _subst(a, s, supply), e.loc)
        case Lam(x, body):
            (x,), body, s = _under_binders((x,), body, s, supply)
            return Lam(x, _subst(body, s, supply), e.loc)
        case Let(x, bound, body):
            bound = _subst(bound, s, supply)
            (x,), body, s2 = _under_binders((x,), body, s, supply)
            return Let(x, bound, _subst(body, s2, supply), e.loc)
        case Case(scrut, branches):
            new = []
            for p, b in branches:
                if isinstance(p, PCon) and p.vars:
                    xs, b, s2 = _under_binders(p.vars, b, s, supply)
                    new.append((PCon(p.name, xs), _subst(b, s2, supply)))
                else:
                    new.append((p, _subst(b, s, supply)))
            return Case(_subst(scrut, s, supply), tuple(new), e.loc)
        case Where(body, defs):
            return Where(_subst(body, s, supply),
                         tuple((f, _subst(d, s, supply)) for f, d in defs), e.loc)
    raise TypeError(f"not an expression: {e!r}")


def _under_binders(xs: tuple, body: Expr, s: dict, supply: NameSupply):
    """Drop shadowed keys and rename binders that would capture."""
    s = {k: v for k, v in s.items() if k not in xs}
    if not s:
        return xs, body, s
    incoming = _fv_union(v.fv for k, v in s.items() if k in body.fv)
    if not any(x in incoming for x in xs):
        return xs, body, s
    avoid = set(incoming) | body.fv | set(s) | set(xs)
    renames = {}
    new_xs = []
    for x in xs:
        if x in incoming:
            y = supply.fresh(x, avoid)
            avoid.add(y)
            renames[x] = Var(y)
            new_xs.append(y)
        else:
            new_xs.append(x)
    body = _subst(body, renames, supply)
    return tuple(new_xs), body, s


# ---------------------------------------------------------------------------
# alpha equivalence


def alpha_key(e: Expr, free_order: list | None = None):
    """Hashable canonical form: bound variables become binder depths.

    When ``free_order`` is a list, free variables are also canonicalised
    (numbered by first occurrence) and the list is filled with their names,
    so two keys are equal iff the terms are equal up to a renaming of
    free variables as well.
    """
    out = []
    _key(e, {}, 0, free_order, {}, out)
    return tuple(out)


def _key(e, env, depth, free_order, free_idx, out):
    match e:
        case Var(name):
            if name in env:
                out.append(("b", depth - env[name]))
            elif free_order is None:
                out.append(("v", name))
            else:
                if name not in free_idx:
                    free_idx[name] = len(free_order)
                    free_order.append(name)
                out.append(("v", free_idx[name]))
        case Fun(name):
            out.append(("f", name))
        case Con(name, args):
            out.append(("c", name, len(args)))
            for a in args:
                _key(a, env, depth, free_order, free_idx, out)
        case App(f, a):
            out.append(("@",))
            _key(f, env, depth, free_order, free_idx, out)
            _key(a, env, depth, free_order, free_idx, out)
        case Lam(x, body):
            out.append(("\\",))
            _key(body, {**env, x: depth + 1}, depth + 1, free_order, free_idx, out)
        case Let(x, bound, body):
            out.append(("let",))
            _key(bound, env, depth, free_order, free_idx, out)
            _key(body, {**env, x: depth + 1}, depth + 1, free_order, free_idx, out)
        case Case(scrut, branches):
            out.append(("case", len(branches)))
            _key(scrut, env, depth, free_order, free_idx, out)
            for p, b in branches:
                if isinstance(p, PCon):
                    out.append(("p", p.name, len(p.vars)))
                    env2 = dict(env)
                    for i, x in enumerate(p.vars):
                        env2[x] = depth + 1 + i
                    _key(b, env2, depth + len(p.vars), free_order, free_idx, out)
                else:
                    out.append(("_",))
                    _key(b, env, depth, free_order, free_idx, out)
        case Where(body, defs):
            out.append(("where", tuple(f for f, _ in defs)))
            _key(body, env, depth, free_order, free_idx, out)
            for _, d in defs:
                _key(d, env, depth, free_order, free_idx, out)
        case _:
            raise TypeError(f"not an expression: {e!r}")


def alpha_eq(a: Expr, b: Expr) -> bool:
    return alpha_key(a) == alpha_key(b)


# ---------------------------------------------------------------------------
# traversal helpers


def subterms(e: Expr) -> Iterator[Expr]:
    """Pre-order iteration over every subexpression."""
    stack = [e]
    while stack:
        e = stack.pop()
        yield e
        match e:
            case Con(_, args):
                stack.extend(reversed(args))
            case App(f, a):
                stack.extend((a, f))
            case Lam(_, body):
                stack.append(body)
            case Let(_, bound, body):
                stack.extend((body, bound))
            case Case(scrut, branches):
                stack.extend(b for _, b in reversed(branches))
                stack.append(scrut)
            case Where(body, defs):
                stack.extend(d for _, d in reversed(defs))
                stack.append(body)


def constructors_used(e: Expr) -> set:
    names = set()
    for t in subterms(e):
        if isinstance(t, Con):
            names.add(t.name)
        elif isinstance(t, Case):
            names.update(p.name for p, _ in t.branches if isinstance(p, PCon))
    return names


def collect_defs(e: Expr) -> dict:
    """Flatten every ``where`` in ``e`` into one function namespace."""
    defs: dict = {}
    for t in subterms(e):
        if isinstance(t, Where):
            for f, d in t.defs:
                if f in defs:
                    raise DuplicateDefinition(f"function {f} defined more than once")
                defs[f] = d
    return defs


# ---------------------------------------------------------------------------
# constructor table and arity checking


@dataclass
class ConstructorTable:
    entries: dict = field(default_factory=dict)  # name -> (arity, datatype)

    @classmethod
    def with_builtins(cls) -> "ConstructorTable":
        t = cls()
        t.declare("Stream", [("Cons", 2)])
        t.declare("TruthVal", [("True", 0), ("False", 0), ("Undefined", 0)])
        return t

    def declare(self, datatype: str, ctors: Iterable[tuple[str, int]]) -> None:
        for name, arity in ctors:
            if name in self.entries:
                raise DuplicateDefinition(f"constructor {name} declared more than once")
            self.entries[name] = (arity, datatype)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def arity(self, name: str) -> int:
        return self.entries[name][0]

    def datatype(self, name: str) -> str:
        return self.entries[name][1]

    def constructors(self, datatype: str) -> list:
        return [c for c, (_, d) in self.entries.items() if d == datatype]

    def datatypes(self) -> list:
        seen = []
        for _, d in self.entries.values():
            if d not in seen:
                seen.append(d)
        return seen


def arity_check(e: Expr, table: ConstructorTable) -> None:
    for t in subterms(e):
        if isinstance(t, Con):
            if t.name not in table:
                raise UndeclaredConstructor(f"undeclared constructor {t.name}",
                                            *(t.loc or (None, None)))
            if len(t.args) != table.arity(t.name):
                raise ArityMismatch(
                    f"constructor {t.name} expects {table.arity(t.name)} "
                    f"argument(s), got {len(t.args)}", t.loc)
        elif isinstance(t, Case):
            for p, _ in t.branches:
                if not isinstance(p, PCon):
                    continue
                if p.name not in table:
                    raise UndeclaredConstructor(f"undeclared constructor {p.name}",
                                                *(t.loc or (None, None)))
                if len(p.vars) != table.arity(p.name):
                    raise ArityMismatch(
                        f"pattern {p.name} expects {table.arity(p.name)} "
                        f"variable(s), got {len(p.vars)}", t.loc)


# ---------------------------------------------------------------------------
# restricted form


@dataclass(frozen=True)
class FunDef:
    params: tuple
    body: Expr


@dataclass
class RestrictedProgram:
    """A program in restricted stream form, with its definitions flattened."""

    top: Expr
    defs: dict  # name -> FunDef
    let_vars: frozenset = frozenset()

    @property
    def entry(self) -> Expr:
        """The top expression with any ``where`` wrappers removed."""
        e = self.top
        while isinstance(e, Where):
            e = e.body
        return e

    def as_expr(self) -> Expr:
        if isinstance(self.top, Where):
            return self.top
        return Where(self.top, tuple((f, lams(d.params, d.body)) for f, d in self.defs.items()))


def validate_restricted(p: Expr) -> RestrictedProgram:
    """Check ``p`` against the restricted grammar; return it with defs flattened."""
    raw = collect_defs(p)
    defs = {}
    for f, d in raw.items():
        params, body = unlam(d)
        defs[f] = FunDef(tuple(params), body)
    let_vars: set = set()
    _check(p, frozenset(), defs, let_vars)
    for d in defs.values():
        _check(d.body, frozenset(), defs, let_vars)
    return RestrictedProgram(p, defs, frozenset(let_vars))


def _check(e: Expr, rho: frozenset, defs: dict, let_vars: set) -> None:
    match e:
        case Con(_, args):
            for a in args:
                _check(a, rho, defs, let_vars)
        case Var(_):
            pass
        case Fun(_) | App(_, _):
            head, args = unapply(e)
            if isinstance(head, Fun):
                if head.name not in defs:
                    raise RestrictedFormError(f"call to undefined function {head.name}", e)
                for a in args:
                    if not isinstance(a, Var):
                        raise NonVariableCallArgument(
                            f"argument of call to {head.name} is not a variable", e)
                if len(args) != len(defs[head.name].params):
                    raise UnsaturatedCall(
                        f"{head.name} takes {len(defs[head.name].params)} "
                        f"argument(s), called with {len(args)}", e)
            elif isinstance(head, Var) and head.name in rho:
                for a in args:
                    _check(a, rho, defs, let_vars)
            else:
                raise RestrictedFormError("application must be headed by a function "
                                          "or a let-bound variable", e)
        case Case(scrut, branches):
            if not isinstance(scrut, Var):
                raise NonVariableScrutinee("case scrutinee is not a variable", e)
            if scrut.name in rho:
                raise LetBoundScrutinee(f"case scrutinee {scrut.name} is let-bound", e)
            for pat, b in branches:
                _check(b, rho - set(pattern_vars(pat)), defs, let_vars)
        case Let(x, bound, body):
            params, inner = unlam(bound)
            _check(inner, rho - set(params), defs, let_vars)
            let_vars.add(x)
            _check(body, rho | {x}, defs, let_vars)
        case Where(body, _):
            # definitions are checked separately from the flattened table
            _check(body, rho, defs, let_vars)
        case Lam(_, _):
            raise RestrictedFormError("lambda outside a let or function definition", e)
        case _:
            raise TypeError(f"not an expression: {e!r}")
