"""LTL formulas, the three-valued truth domain and the property parser.

Property syntax (ASCII)::

    G p   always        F p   eventually     X p   next
    ~p    negation      p /\\ q   p \\/ q     p => q  (right associative)
    { expr }            atomic proposition over the state variable ``s``
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import Con, ConstructorTable, Expr, substitute
from .errors import ParseError, TemporalInAtom
from .syntax import Parser, parse_expr

STATE_VAR = "s"


class TruthVal(enum.Enum):
    TRUE = "True"
    FALSE = "False"
    UNDEFINED = "Undefined"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def from_con(cls, c: Con) -> "TruthVal":
        return cls(c.name)


T, F, U = TruthVal.TRUE, TruthVal.FALSE, TruthVal.UNDEFINED


# The connectives are written as the nested case analyses of the
# verification rules rather than as min/max over an information order.

def k_and(a: TruthVal, b: TruthVal) -> TruthVal:
    match a:
        case TruthVal.TRUE:
            return b
        case TruthVal.FALSE:
            return F
        case _:
            return F if b is F else U


def k_or(a: TruthVal, b: TruthVal) -> TruthVal:
    match a:
        case TruthVal.TRUE:
            return T
        case TruthVal.FALSE:
            return b
        case _:
            return T if b is T else U


def k_implies(a: TruthVal, b: TruthVal) -> TruthVal:
    match a:
        case TruthVal.TRUE:
            return b
        case TruthVal.FALSE:
            return T
        case _:
            return T if b is T else U


def k_not(a: TruthVal) -> TruthVal:
    match a:
        case TruthVal.TRUE:
            return F
        case TruthVal.FALSE:
            return T
        case _:
            return U


# ---------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class Atom:
    prop: Expr

    def __str__(self):
        from .syntax import pretty_expr
        return "{ " + pretty_expr(self.prop) + " }"


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self):
        return f"~{_wrap(self.arg)}"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} /\\ {self.right})"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} \\/ {self.right})"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} => {self.right})"


@dataclass(frozen=True)
class Always:
    arg: "Formula"

    def __str__(self):
        return f"G {_wrap(self.arg)}"


@dataclass(frozen=True)
class Eventually:
    arg: "Formula"

    def __str__(self):
        return f"F {_wrap(self.arg)}"


@dataclass(frozen=True)
class Next:
    arg: "Formula"

    def __str__(self):
        return f"X {_wrap(self.arg)}"


Formula = Atom | Not | And | Or | Implies | Always | Eventually | Next


def _wrap(f: Formula) -> str:
    return str(f)


def subformulas(f: Formula) -> list:
    """Post-order list of distinct subformulas (children before parents)."""
    out: list = []

    def walk(g):
        match g:
            case Atom():
                pass
            case Not(a) | Always(a) | Eventually(a) | Next(a):
                walk(a)
            case And(a, b) | Or(a, b) | Implies(a, b):
                walk(a)
                walk(b)
        if g not in out:
            out.append(g)

    walk(f)
    return out


def formula_depth(f: Formula) -> int:
    match f:
        case Atom():
            return 0
        case Not(a) | Always(a) | Eventually(a) | Next(a):
            return 1 + formula_depth(a)
        case And(a, b) | Or(a, b) | Implies(a, b):
            return 1 + max(formula_depth(a), formula_depth(b))


def subst_state(prop: Expr, state: Expr) -> Expr:
    return substitute(prop, (STATE_VAR, state))


@dataclass(frozen=True)
class FairnessSet:
    events: frozenset

    def __contains__(self, name: str) -> bool:
        return name in self.events

    @classmethod
    def all_of(cls, table: ConstructorTable, datatype: str = "Event") -> "FairnessSet":
        return cls(frozenset(table.constructors(datatype)))

    @classmethod
    def parse(cls, text: str, table: ConstructorTable, datatype: str = "Event") -> "FairnessSet":
        """``all``, ``none`` or a comma-separated list of event constructors."""
        declared = table.constructors(datatype)
        text = text.strip()
        if text == "all":
            return cls(frozenset(declared))
        if text in ("", "none"):
            return cls(frozenset())
        names = [n.strip() for n in text.split(",") if n.strip()]
        unknown = [n for n in names if n not in declared]
        if unknown:
            raise ValueError(f"not declared {datatype} constructors: {', '.join(unknown)}")
        return cls(frozenset(names))


# ---------------------------------------------------------------------------
# parsing


class _FormulaParser(Parser):
    def __init__(self, text, table, funs):
        super().__init__(text, table)
        self.text = text
        self.funs = funs
        self._offsets = _line_offsets(text)

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.at("=>"):
            self.advance()
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.at("\\/"):
            self.advance()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.at("/\\"):
            self.advance()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        t = self.tok
        if self.at("~"):
            self.advance()
            return Not(self.unary())
        if t.kind == "ctor" and t.text in ("G", "F", "X"):
            self.advance()
            inner = self.unary()
            return {"G": Always, "F": Eventually, "X": Next}[t.text](inner)
        if self.at("("):
            self.advance()
            f = self.formula()
            self.expect(")")
            return f
        if self.at("{"):
            return self.atom_formula()
        self.error("expected a formula")

    def atom_formula(self) -> Formula:
        open_tok = self.advance()
        depth = 1
        start = self.i
        while depth:
            t = self.tok
            if t.kind == "eof":
                raise ParseError("unterminated atomic proposition", open_tok.line, open_tok.col)
            if self.at("{"):
                raise TemporalInAtom("temporal formula inside an atomic proposition",
                                     t.line, t.col)
            if self.at("}"):
                depth -= 1
            if depth:
                self.advance()
        close_tok = self.advance()
        a = self._offsets[open_tok.line - 1] + open_tok.col
        b = self._offsets[close_tok.line - 1] + close_tok.col - 1
        body = self.text[a:b]
        if start == self.i - 1:
            raise ParseError("empty atomic proposition", open_tok.line, open_tok.col)
        prop = parse_expr(body, self.table, self.funs)
        extra = prop.fv - {STATE_VAR}
        if extra:
            raise ParseError(f"atomic proposition mentions free variable(s) "
                             f"{', '.join(sorted(extra))}; only {STATE_VAR} is in scope",
                             open_tok.line, open_tok.col)
        return Atom(prop)


def _line_offsets(text: str) -> list:
    offsets, pos = [0], 0
    for line in text.split("\n"):
        pos += len(line) + 1
        offsets.append(pos)
    return offsets


def parse_formula(text: str, table: ConstructorTable | None = None,
                  funs: frozenset = frozenset()) -> Formula:
    p = _FormulaParser(text, table, funs)
    f = p.formula()
    if p.tok.kind != "eof":
        p.error("unexpected trailing input")
    return f
