"""First-order formula ASTs, the text grammar, and the printer.

Grammar (binding loosest to tightest): `->` (right associative), `|`, `&`,
then `!` / quantifiers.  Atoms are `R(t,...)` and `t = t`; terms are
variables `[a-z][a-z0-9]*`, element literals `#k`, constant symbols, and
function applications.  Quantifiers are written `exists x (...)` and
`forall x (...)`; the body may also be a bare atom or another quantifier.

`TypeIs` is a semantic atom (satisfied exactly by one orbit of tuples);
it is constructed programmatically, never parsed.  Printing one expands
it through an isolating formula so every printed witness stays inside
the grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator

from .errors import ParseError
from .structures import Signature

if TYPE_CHECKING:  # pragma: no cover
    from .semantics import TypeId, TypeSpace


# --- Terms -----------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Elem:
    value: int


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class App:
    func: str
    args: tuple["Term", ...]


Term = Var | Elem | Const | App


# --- Formulas ---------------------------------------------------------------

@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class TypeIs:
    """Semantic atom: the tuple of argument terms realizes type `type_id`."""

    space: "TypeSpace"
    type_id: "TypeId"
    args: tuple[Term, ...]


Formula = Eq | Rel | Not | And | Or | Implies | Exists | Forall | TypeIs


def conj(parts: list[Formula]) -> Formula:
    if not parts:
        return Eq(Var("x"), Var("x"))
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts: list[Formula]) -> Formula:
    if not parts:
        return Not(Eq(Var("x"), Var("x")))
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def term_vars(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, App):
        for a in t.args:
            yield from term_vars(a)


def free_vars(phi: Formula) -> frozenset[str]:
    if isinstance(phi, Eq):
        return frozenset(term_vars(phi.left)) | frozenset(term_vars(phi.right))
    if isinstance(phi, Rel):
        out: frozenset[str] = frozenset()
        for a in phi.args:
            out |= frozenset(term_vars(a))
        return out
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, (And, Or, Implies)):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, (Exists, Forall)):
        return free_vars(phi.body) - {phi.var}
    if isinstance(phi, TypeIs):
        out = frozenset()
        for a in phi.args:
            out |= frozenset(term_vars(a))
        return out
    raise TypeError(f"not a formula: {phi!r}")


def substitute(phi: Formula, repl: dict[str, Term]) -> Formula:
    """Capture-avoiding substitution of free variables by terms."""

    def sub_term(t: Term) -> Term:
        if isinstance(t, Var):
            return repl.get(t.name, t)
        if isinstance(t, App):
            return App(t.func, tuple(sub_term(a) for a in t.args))
        return t

    if isinstance(phi, Eq):
        return Eq(sub_term(phi.left), sub_term(phi.right))
    if isinstance(phi, Rel):
        return Rel(phi.name, tuple(sub_term(a) for a in phi.args))
    if isinstance(phi, Not):
        return Not(substitute(phi.body, repl))
    if isinstance(phi, (And, Or, Implies)):
        return type(phi)(substitute(phi.left, repl), substitute(phi.right, repl))
    if isinstance(phi, (Exists, Forall)):
        inner = {k: v for k, v in repl.items() if k != phi.var}
        captured = {
            v for t in inner.values() for v in term_vars(t)
        }
        var = phi.var
        body = phi.body
        if var in captured:
            fresh = var
            taken = captured | free_vars(body) | set(inner)
            while fresh in taken:
                fresh += "0"
            body = substitute(body, {var: Var(fresh)})
            var = fresh
        return type(phi)(var, substitute(body, inner))
    if isinstance(phi, TypeIs):
        return TypeIs(phi.space, phi.type_id, tuple(sub_term(a) for a in phi.args))
    raise TypeError(f"not a formula: {phi!r}")


# --- Parser -----------------------------------------------------------------

_FTOKEN_RE = re.compile(
    r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<elem>#\d+)"
    r"|(?P<arrow>->)|(?P<punct>[()=,!&|]))"
)

_KEYWORDS = {"exists", "forall"}
_VAR_RE = re.compile(r"[a-z][a-z0-9]*\Z")


class _FTok:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        m = _FTOKEN_RE.match(self.text, self.pos)
        if m is None:
            rest = self.text[self.pos :].strip()
            if rest:
                raise ParseError(f"unexpected character {rest[0]!r}", self.pos)
            return None
        kind = m.lastgroup
        assert kind is not None
        return kind, m.group(kind)

    def advance(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of formula", self.pos)
        m = _FTOKEN_RE.match(self.text, self.pos)
        assert m is not None
        self.pos = m.end()
        return tok

    def expect(self, value: str) -> None:
        tok = self.advance()
        if tok[1] != value:
            raise ParseError(f"expected {value!r}, got {tok[1]!r}", self.pos)


class _FormulaParser:
    def __init__(self, text: str, sig: Signature):
        self.tk = _FTok(text)
        self.sig = sig

    def parse(self) -> Formula:
        phi = self.implies()
        if self.tk.peek() is not None:
            raise ParseError("trailing input after formula", self.tk.pos)
        return phi

    def implies(self) -> Formula:
        left = self.disjunct()
        tok = self.tk.peek()
        if tok is not None and tok[0] == "arrow":
            self.tk.advance()
            return Implies(left, self.implies())
        return left

    def disjunct(self) -> Formula:
        out = self.conjunct()
        while True:
            tok = self.tk.peek()
            if tok is None or tok[1] != "|":
                return out
            self.tk.advance()
            out = Or(out, self.conjunct())

    def conjunct(self) -> Formula:
        out = self.unary()
        while True:
            tok = self.tk.peek()
            if tok is None or tok[1] != "&":
                return out
            self.tk.advance()
            out = And(out, self.unary())

    def unary(self) -> Formula:
        tok = self.tk.peek()
        if tok is None:
            raise ParseError("unexpected end of formula", self.tk.pos)
        if tok[1] == "!":
            self.tk.advance()
            return Not(self.unary())
        if tok[1] in _KEYWORDS:
            self.tk.advance()
            var_tok = self.tk.advance()
            if var_tok[0] != "name" or not _VAR_RE.match(var_tok[1]):
                raise ParseError(f"bad quantified variable {var_tok[1]!r}", self.tk.pos)
            if self.sig.kind_of(var_tok[1]) is not None:
                raise ParseError(
                    f"quantified variable {var_tok[1]!r} clashes with a symbol",
                    self.tk.pos,
                )
            body = self.unary()
            return (Exists if tok[1] == "exists" else Forall)(var_tok[1], body)
        return self.primary()

    def primary(self) -> Formula:
        tok = self.tk.peek()
        if tok is None:
            raise ParseError("unexpected end of formula", self.tk.pos)
        if tok[1] == "(":
            self.tk.advance()
            phi = self.implies()
            self.tk.expect(")")
            return phi
        return self.atom()

    def atom(self) -> Formula:
        tok = self.tk.peek()
        if tok is None:
            raise ParseError("expected an atom", self.tk.pos)
        if tok[0] == "name" and self.sig.kind_of(tok[1]) == "relation":
            name = self.tk.advance()[1]
            args = self.term_list()
            want = self.sig.relations[name]
            if len(args) != want:
                raise ParseError(
                    f"relation {name} expects {want} arguments, got {len(args)}",
                    self.tk.pos,
                )
            return Rel(name, args)
        left = self.term()
        self.tk.expect("=")
        right = self.term()
        return Eq(left, right)

    def term_list(self) -> tuple[Term, ...]:
        self.tk.expect("(")
        args: list[Term] = []
        while True:
            tok = self.tk.peek()
            if tok is not None and tok[1] == ")":
                self.tk.advance()
                return tuple(args)
            if args:
                self.tk.expect(",")
            args.append(self.term())

    def term(self) -> Term:
        tok = self.tk.advance()
        if tok[0] == "elem":
            return Elem(int(tok[1][1:]))
        if tok[0] != "name":
            raise ParseError(f"expected a term, got {tok[1]!r}", self.tk.pos)
        name = tok[1]
        kind = self.sig.kind_of(name)
        if kind == "function":
            args = self.term_list()
            want = self.sig.functions[name]
            if len(args) != want:
                raise ParseError(
                    f"function {name} expects {want} arguments, got {len(args)}",
                    self.tk.pos,
                )
            return App(name, args)
        if kind == "constant":
            return Const(name)
        if kind == "relation":
            raise ParseError(f"relation {name} used as a term", self.tk.pos)
        if not _VAR_RE.match(name) or name in _KEYWORDS:
            raise ParseError(f"unknown symbol {name!r}", self.tk.pos)
        return Var(name)


def parse_formula(text: str, sig: Signature) -> Formula:
    """Parse `text` against `sig`; raises ParseError with a position."""
    return _FormulaParser(text, sig).parse()


# --- Printer ----------------------------------------------------------------

def _term_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Elem):
        return f"#{t.value}"
    if isinstance(t, Const):
        return t.name
    return f"{t.func}({', '.join(_term_str(a) for a in t.args)})"


_PREC = {Implies: 1, Or: 2, And: 3}


def format_formula(phi: Formula, _prec: int = 0) -> str:
    """Render back into the grammar; `parse_formula` round-trips the result."""
    if isinstance(phi, Eq):
        return f"{_term_str(phi.left)} = {_term_str(phi.right)}"
    if isinstance(phi, Rel):
        return f"{phi.name}({', '.join(_term_str(a) for a in phi.args)})"
    if isinstance(phi, Not):
        return f"!{format_formula(phi.body, 4)}"
    if isinstance(phi, (And, Or, Implies)):
        prec = _PREC[type(phi)]
        op = {And: "&", Or: "|", Implies: "->"}[type(phi)]
        # -> is right associative, & and | left associative
        lp = prec if isinstance(phi, Implies) else prec - 1
        rp = prec - 1 if isinstance(phi, Implies) else prec
        left = format_formula(phi.left, lp + 1)
        right = format_formula(phi.right, rp + 1)
        body = f"{left} {op} {right}"
        return f"({body})" if prec < _prec else body
    if isinstance(phi, (Exists, Forall)):
        kw = "exists" if isinstance(phi, Exists) else "forall"
        return f"{kw} {phi.var} ({format_formula(phi.body)})"
    if isinstance(phi, TypeIs):
        from .semantics import isolating_formula

        iso = isolating_formula(phi.space, phi.type_id)
        expanded = substitute(
            iso, {f"x{i}": a for i, a in enumerate(phi.args)}
        )
        return format_formula(expanded, _prec)
    raise TypeError(f"not a formula: {phi!r}")
