"""Concrete syntax: tokenizer, recursive-descent parser and pretty-printer.

The notation follows the typeset programs closely::

    data ProcState = T/0 | W/0 | U/0;
    f es T T
    where
      f = \\es s1 s2. Cons (ObsState s1 s2) (case es of Cons e es: ...);

Lambdas are ``\\x y. e`` (desugared to nested unary lambdas), a case
expression extends as far right as possible, so a case in a non-final
branch must be parenthesised.  ``--`` starts a line comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import (
    WILDCARD,
    App,
    Case,
    Con,
    ConstructorTable,
    Expr,
    Fun,
    Lam,
    Let,
    PCon,
    Var,
    Where,
    Wildcard,
    unapply,
    unlam,
)
from .errors import (
    DuplicateDefinition,
    DuplicatePatternVariable,
    NestedPattern,
    ParseError,
    UndeclaredConstructor,
)

KEYWORDS = {"case", "of", "let", "in", "where", "data"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|--[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[a-z][A-Za-z0-9_'$]*|_[A-Za-z0-9_'$]+)
  | (?P<ctor>[A-Z][A-Za-z0-9_']*)
  | (?P<sym>=>|/\\|\\/|[\\λ.:|;=()/{}~_])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, ctor, num, sym, kw, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            if kind == "ident" and value in KEYWORDS:
                kind = "kw"
            if value == "λ":
                value = "\\"
            tokens.append(Token(kind, value, line, m.start() - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


@dataclass
class SourceFile:
    datatypes: list  # of (name, [(ctor, arity), ...])
    main: Expr
    table: ConstructorTable = field(default_factory=ConstructorTable.with_builtins)


class Parser:
    def __init__(self, text: str, table: ConstructorTable | None = None):
        self.toks = tokenize(text)
        self.i = 0
        self.table = table

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("sym", "kw")

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            self.error(f"expected {what}")
        return self.advance()

    def error(self, message: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{message}, found {found}", t.line, t.col)

    # -- declarations
    def datatypes(self) -> list:
        decls = []
        while self.at("data"):
            self.advance()
            name = self.expect_kind("ctor", "datatype name").text
            self.expect("=")
            ctors = [self.ctor_decl()]
            while self.at("|"):
                self.advance()
                ctors.append(self.ctor_decl())
            self.expect(";")
            decls.append((name, ctors))
        return decls

    def ctor_decl(self) -> tuple:
        name = self.expect_kind("ctor", "constructor name").text
        self.expect("/")
        arity = int(self.expect_kind("num", "arity").text)
        return name, arity

    # -- expressions
    def expr(self) -> Expr:
        start = self.tok
        body = self.simple()
        if not self.at("where"):
            return body
        self.advance()
        defs = []
        while self.tok.kind == "ident" and self.peek().text == "=":
            name = self.advance().text
            self.expect("=")
            defs.append((name, self.simple()))
            self.expect(";")
        if not defs:
            self.error("expected a function definition after 'where'")
        return Where(body, tuple(defs), (start.line, start.col))

    def simple(self) -> Expr:
        t = self.tok
        loc = (t.line, t.col)
        if self.at("\\"):
            self.advance()
            params = [self.expect_kind("ident", "parameter name").text]
            while self.tok.kind == "ident":
                params.append(self.advance().text)
            self.expect(".")
            body = self.simple()
            for p in reversed(params):
                body = Lam(p, body, loc)
            return body
        if self.at("case"):
            self.advance()
            scrut = self.simple()
            self.expect("of")
            branches = [self.branch()]
            while self.at("|"):
                self.advance()
                branches.append(self.branch())
            for p, _ in branches[:-1]:
                if isinstance(p, Wildcard):
                    raise ParseError("wildcard pattern must be the last branch", t.line, t.col)
            return Case(scrut, tuple(branches), loc)
        if self.at("let"):
            self.advance()
            x = self.expect_kind("ident", "let binder").text
            self.expect("=")
            bound = self.simple()
            self.expect("in")
            return Let(x, bound, self.simple(), loc)
        return self.application()

    def branch(self) -> tuple:
        t = self.tok
        if self.at("_"):
            self.advance()
            pat = WILDCARD
        else:
            name = self.expect_kind("ctor", "pattern").text
            xs = []
            while True:
                if self.tok.kind == "ident":
                    x = self.advance().text
                    if x in xs:
                        raise DuplicatePatternVariable(
                            f"variable {x} occurs twice in pattern", t.line, t.col)
                    xs.append(x)
                elif self.tok.kind == "ctor" or self.at("(") or self.at("_"):
                    raise NestedPattern("patterns may not be nested", self.tok.line, self.tok.col)
                else:
                    break
            pat = PCon(name, tuple(xs))
        self.expect(":")
        return pat, self.simple()

    def starts_atom(self) -> bool:
        return self.tok.kind in ("ident", "ctor") or self.at("(")

    def application(self) -> Expr:
        t = self.tok
        loc = (t.line, t.col)
        if t.kind == "ctor":
            self.advance()
            args = []
            while self.starts_atom():
                args.append(self.atom())
            return Con(t.text, tuple(args), loc)
        if not self.starts_atom():
            self.error("expected an expression")
        e = self.atom()
        while self.starts_atom():
            e = App(e, self.atom(), loc)
        return e

    def atom(self) -> Expr:
        t = self.tok
        loc = (t.line, t.col)
        if t.kind == "ident":
            self.advance()
            return Var(t.text, loc)
        if t.kind == "ctor":
            self.advance()
            return Con(t.text, (), loc)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.error("expected an expression")


# ---------------------------------------------------------------------------
# name resolution: unbound lower-case names defined by a where become Fun


def _resolve(e: Expr, bound: frozenset, funs: frozenset, table: ConstructorTable | None) -> Expr:
    match e:
        case Var(name):
            if name not in bound and name in funs:
                return Fun(name, e.loc)
            return e
        case Fun(_):
            return e
        case Con(name, args):
            if table is not None and name not in table:
                raise UndeclaredConstructor(f"undeclared constructor {name}",
                                            *(e.loc or (None, None)))
            return Con(name, tuple(_resolve(a, bound, funs, table) for a in args), e.loc)
        case App(f, a):
            return App(_resolve(f, bound, funs, table), _resolve(a, bound, funs, table), e.loc)
        case Lam(x, body):
            return Lam(x, _resolve(body, bound | {x}, funs, table), e.loc)
        case Let(x, b, body):
            return Let(x, _resolve(b, bound, funs, table),
                       _resolve(body, bound | {x}, funs, table), e.loc)
        case Case(scrut, branches):
            out = []
            for p, b in branches:
                if isinstance(p, PCon) and table is not None and p.name not in table:
                    raise UndeclaredConstructor(f"undeclared constructor {p.name}",
                                                *(e.loc or (None, None)))
                xs = p.vars if isinstance(p, PCon) else ()
                out.append((p, _resolve(b, bound | set(xs), funs, table)))
            return Case(_resolve(scrut, bound, funs, table), tuple(out), e.loc)
        case Where(body, defs):
            return Where(_resolve(body, bound, funs, table),
                         tuple((f, _resolve(d, bound, funs, table)) for f, d in defs), e.loc)
    raise TypeError(e)


def _def_names(e: Expr) -> list:
    from .core import subterms
    names = []
    for t in subterms(e):
        if isinstance(t, Where):
            names.extend(f for f, _ in t.defs)
    return names


def parse_program(text: str) -> SourceFile:
    p = Parser(text)
    decls = p.datatypes()
    table = ConstructorTable.with_builtins()
    for name, ctors in decls:
        table.declare(name, ctors)
    main = p.expr()
    if p.tok.kind != "eof":
        p.error("unexpected trailing input")
    names = _def_names(main)
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise DuplicateDefinition(f"function(s) defined more than once: {', '.join(sorted(dupes))}")
    main = _resolve(main, frozenset(), frozenset(names), table)
    return SourceFile(decls, main, table)


def parse_expr(text: str, table: ConstructorTable | None = None,
               funs: frozenset = frozenset()) -> Expr:
    """Parse a standalone expression; ``funs`` names functions in scope."""
    p = Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        p.error("unexpected trailing input")
    names = frozenset(_def_names(e)) | funs
    return _resolve(e, frozenset(), names, table)


# ---------------------------------------------------------------------------
# pretty-printing

# precedence contexts
_TOP, _OPEN, _CLOSED, _ARG = 0, 1, 2, 3
# _TOP: anything, including where; _OPEN: open-ended forms allowed;
# _CLOSED: open-ended forms need parentheses; _ARG: atoms only


def _paren(s: str, need: bool) -> str:
    return f"({s})" if need else s


def pretty_expr(e: Expr, prec: int = _TOP, indent: str = "") -> str:
    match e:
        case Var(name) | Fun(name):
            return name
        case Con(name, ()):
            return name
        case Con(name, args):
            s = " ".join([name, *(pretty_expr(a, _ARG, indent) for a in args)])
            return _paren(s, prec >= _ARG)
        case App(_, _):
            head, args = unapply(e)
            s = " ".join([pretty_expr(head, _ARG, indent),
                          *(pretty_expr(a, _ARG, indent) for a in args)])
            return _paren(s, prec >= _ARG)
        case Lam(_, _):
            params, body = unlam(e)
            s = f"\\{' '.join(params)}. {pretty_expr(body, _OPEN, indent)}"
            return _paren(s, prec >= _CLOSED)
        case Case(scrut, branches):
            parts = []
            for i, (p, b) in enumerate(branches):
                pat = "_" if isinstance(p, Wildcard) else " ".join([p.name, *p.vars])
                last = i == len(branches) - 1
                parts.append(f"{pat}: {pretty_expr(b, _OPEN if last else _CLOSED, indent)}")
            s = f"case {pretty_expr(scrut, _CLOSED, indent)} of {' | '.join(parts)}"
            return _paren(s, prec >= _CLOSED)
        case Let(x, bound, body):
            s = (f"let {x} = {pretty_expr(bound, _OPEN, indent)} "
                 f"in {pretty_expr(body, _OPEN, indent)}")
            return _paren(s, prec >= _CLOSED)
        case Where(body, defs):
            inner = indent + "  "
            lines = [pretty_expr(body, _OPEN, indent), f"{indent}where"]
            for f, d in defs:
                lines.append(f"{inner}{f} = {pretty_expr(d, _OPEN, inner)};")
            s = "\n".join(lines)
            return _paren(s, prec > _TOP)
    raise TypeError(e)


def pretty_program(src: SourceFile) -> str:
    out = []
    for name, ctors in src.datatypes:
        out.append(f"data {name} = {' | '.join(f'{c}/{n}' for c, n in ctors)};")
    if out:
        out.append("")
    out.append(pretty_expr(src.main))
    return "\n".join(out) + "\n"
