"""Continuous formulas over randomizations: AST, grammar, exact evaluation.

Values live in [0, 1] and are generated by rational constants, 1-u,
truncated subtraction, halving, min and max; atoms are measures of event
terms, the distance predicates, and the single-sorted `P[phi]` shorthand
for `mu[[ phi ]]`.  The only quantifiers are `sup x (...)` and
`inf x (...)` over the random-element sort, evaluated by exhaustive
enumeration under an explicit budget.

Grammar summary:

    value   := `p/q` | `k` | `~u` | `u -. v` | `half(u)` | `min(u,v)`
             | `max(u,v)` | `mu[[ fo ]]` | `mu[ ev ]` | `P[ fo ]`
             | `dK(x, y)` | `dB(ev, ev)` | `sup x (...)` | `inf x (...)`
    ev      := `[[ fo ]]` | `top` | `bot` | `!ev` | `ev & ev` | `ev | ev`
             | `ev ^ ev` | event name | `(ev)`
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import BudgetError, ParseError, ValidationError
from .formulas import Formula, format_formula, free_vars, parse_formula
from .randomization import Event, RandomElement, Randomization, event_of, mu
from .structures import Signature

DEFAULT_BUDGET = 200_000


# --- Event terms --------------------------------------------------------------

@dataclass(frozen=True)
class EvFormula:
    phi: Formula


@dataclass(frozen=True)
class EvTop:
    pass


@dataclass(frozen=True)
class EvBot:
    pass


@dataclass(frozen=True)
class EvName:
    name: str


@dataclass(frozen=True)
class EvNot:
    body: "EventTerm"


@dataclass(frozen=True)
class EvMeet:
    left: "EventTerm"
    right: "EventTerm"


@dataclass(frozen=True)
class EvJoin:
    left: "EventTerm"
    right: "EventTerm"


@dataclass(frozen=True)
class EvSymDiff:
    left: "EventTerm"
    right: "EventTerm"


EventTerm = EvFormula | EvTop | EvBot | EvName | EvNot | EvMeet | EvJoin | EvSymDiff


# --- Value terms ---------------------------------------------------------------

@dataclass(frozen=True)
class CConst:
    value: Fraction


@dataclass(frozen=True)
class CNeg:  # 1 - u
    body: "CFormula"


@dataclass(frozen=True)
class CTruncSub:  # u -. v = max(0, u - v)
    left: "CFormula"
    right: "CFormula"


@dataclass(frozen=True)
class CHalf:
    body: "CFormula"


@dataclass(frozen=True)
class CMin:
    left: "CFormula"
    right: "CFormula"


@dataclass(frozen=True)
class CMax:
    left: "CFormula"
    right: "CFormula"


@dataclass(frozen=True)
class CMu:
    event: EventTerm


@dataclass(frozen=True)
class CDK:
    left: str
    right: str


@dataclass(frozen=True)
class CDB:
    left: EventTerm
    right: EventTerm


@dataclass(frozen=True)
class CSup:
    var: str
    body: "CFormula"


@dataclass(frozen=True)
class CInf:
    var: str
    body: "CFormula"


CFormula = CConst | CNeg | CTruncSub | CHalf | CMin | CMax | CMu | CDK | CDB | CSup | CInf


def cformula_free_kvars(c: CFormula) -> frozenset[str]:
    """Free random-element variables of a continuous formula."""
    if isinstance(c, CConst):
        return frozenset()
    if isinstance(c, (CNeg, CHalf)):
        return cformula_free_kvars(c.body)
    if isinstance(c, (CTruncSub, CMin, CMax)):
        return cformula_free_kvars(c.left) | cformula_free_kvars(c.right)
    if isinstance(c, CMu):
        return _event_kvars(c.event)
    if isinstance(c, CDK):
        return frozenset({c.left, c.right})
    if isinstance(c, CDB):
        return _event_kvars(c.left) | _event_kvars(c.right)
    if isinstance(c, (CSup, CInf)):
        return cformula_free_kvars(c.body) - {c.var}
    raise TypeError(f"not a continuous formula: {c!r}")


def _event_kvars(e: EventTerm) -> frozenset[str]:
    if isinstance(e, EvFormula):
        return free_vars(e.phi)
    if isinstance(e, (EvTop, EvBot, EvName)):
        return frozenset()
    if isinstance(e, EvNot):
        return _event_kvars(e.body)
    return _event_kvars(e.left) | _event_kvars(e.right)


# --- Parser ---------------------------------------------------------------------

_CTOK = re.compile(
    r"\s*(?:(?P<dbrack_open>\[\[)|(?P<dbrack_close>\]\])"
    r"|(?P<rat>\d+\s*/\s*\d+|\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<trunc>-\.)|(?P<punct>[()\[\],~!&|^]))"
)


class _CTok:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self):
        m = _CTOK.match(self.text, self.pos)
        if m is None:
            rest = self.text[self.pos :].strip()
            if rest:
                raise ParseError(f"unexpected character {rest[0]!r}", self.pos)
            return None
        kind = m.lastgroup
        return kind, m.group(kind), m.end()

    def advance(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.pos)
        self.pos = tok[2]
        return tok[0], tok[1]

    def expect(self, value: str):
        kind, text = self.advance()
        if text != value:
            raise ParseError(f"expected {value!r}, got {text!r}", self.pos)


class _CParser:
    def __init__(self, text: str, sig: Signature):
        self.tk = _CTok(text)
        self.sig = sig

    def parse(self) -> CFormula:
        out = self.value()
        if self.tk.peek() is not None:
            raise ParseError("trailing input", self.tk.pos)
        return out

    def value(self) -> CFormula:
        left = self.unary()
        while True:
            tok = self.tk.peek()
            if tok is None or tok[0] != "trunc":
                return left
            self.tk.advance()
            left = CTruncSub(left, self.unary())

    def unary(self) -> CFormula:
        tok = self.tk.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.tk.pos)
        if tok[1] == "~":
            self.tk.advance()
            return CNeg(self.unary())
        return self.primary()

    def _formula_in_brackets(self, closer: str) -> Formula:
        # scan to the matching closer, then defer to the first-order parser
        depth = 0
        start = self.tk.pos
        text = self.tk.text
        i = start
        while i < len(text):
            if closer == "]]" and text.startswith("]]", i) and depth == 0:
                phi = parse_formula(text[start:i], self.sig)
                self.tk.pos = i + 2
                return phi
            if closer == "]" and text[i] == "]" and depth == 0:
                phi = parse_formula(text[start:i], self.sig)
                self.tk.pos = i + 1
                return phi
            if text[i] == "[":
                depth += 1
            elif text[i] == "]":
                depth -= 1
            i += 1
        raise ParseError(f"missing {closer!r}", self.tk.pos)

    def primary(self) -> CFormula:
        tok = self.tk.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.tk.pos)
        kind, text, _ = tok
        if kind == "rat":
            self.tk.advance()
            value = Fraction(text.replace(" ", ""))
            if not 0 <= value <= 1:
                raise ParseError(f"constant {value} outside [0, 1]", self.tk.pos)
            return CConst(value)
        if text == "(":
            self.tk.advance()
            out = self.value()
            self.tk.expect(")")
            return out
        if kind == "name":
            if text == "mu":
                self.tk.advance()
                nxt = self.tk.peek()
                if nxt is not None and nxt[0] == "dbrack_open":
                    self.tk.advance()
                    phi = self._formula_in_brackets("]]")
                    return CMu(EvFormula(phi))
                self.tk.expect("[")
                ev = self.event()
                self.tk.expect("]")
                return CMu(ev)
            if text == "P":
                self.tk.advance()
                self.tk.expect("[")
                phi = self._formula_in_brackets("]")
                return CMu(EvFormula(phi))
            if text == "dK":
                self.tk.advance()
                self.tk.expect("(")
                a = self._kvar()
                self.tk.expect(",")
                b = self._kvar()
                self.tk.expect(")")
                return CDK(a, b)
            if text == "dB":
                self.tk.advance()
                self.tk.expect("(")
                e1 = self.event()
                self.tk.expect(",")
                e2 = self.event()
                self.tk.expect(")")
                return CDB(e1, e2)
            if text == "half":
                self.tk.advance()
                self.tk.expect("(")
                u = self.value()
                self.tk.expect(")")
                return CHalf(u)
            if text in ("min", "max"):
                self.tk.advance()
                self.tk.expect("(")
                u = self.value()
                self.tk.expect(",")
                v = self.value()
                self.tk.expect(")")
                return (CMin if text == "min" else CMax)(u, v)
            if text in ("sup", "inf"):
                self.tk.advance()
                var = self._kvar()
                self.tk.expect("(")
                body = self.value()
                self.tk.expect(")")
                return (CSup if text == "sup" else CInf)(var, body)
        raise ParseError(f"unexpected token {text!r}", self.tk.pos)

    def _kvar(self) -> str:
        kind, text = self.tk.advance()
        if kind != "name" or not re.match(r"[a-z][a-z0-9]*\Z", text):
            raise ParseError(f"expected a random-element variable, got {text!r}", self.tk.pos)
        return text

    def event(self) -> EventTerm:
        return self._ev_join()

    def _ev_join(self) -> EventTerm:
        out = self._ev_meet()
        while True:
            tok = self.tk.peek()
            if tok is None or tok[1] not in ("|", "^"):
                return out
            op = self.tk.advance()[1]
            rhs = self._ev_meet()
            out = EvJoin(out, rhs) if op == "|" else EvSymDiff(out, rhs)

    def _ev_meet(self) -> EventTerm:
        out = self._ev_unary()
        while True:
            tok = self.tk.peek()
            if tok is None or tok[1] != "&":
                return out
            self.tk.advance()
            out = EvMeet(out, self._ev_unary())

    def _ev_unary(self) -> EventTerm:
        tok = self.tk.peek()
        if tok is None:
            raise ParseError("unexpected end of event term", self.tk.pos)
        if tok[1] == "!":
            self.tk.advance()
            return EvNot(self._ev_unary())
        if tok[1] == "(":
            self.tk.advance()
            out = self.event()
            self.tk.expect(")")
            return out
        if tok[0] == "dbrack_open":
            self.tk.advance()
            return EvFormula(self._formula_in_brackets("]]"))
        if tok[1] == "top":
            self.tk.advance()
            return EvTop()
        if tok[1] == "bot":
            self.tk.advance()
            return EvBot()
        if tok[0] == "name":
            self.tk.advance()
            return EvName(tok[1])
        raise ParseError(f"unexpected token {tok[1]!r} in event term", self.tk.pos)


def parse_cformula(text: str, sig: Signature) -> CFormula:
    return _CParser(text, sig).parse()


# --- Printer --------------------------------------------------------------------

def format_cformula(c: CFormula) -> str:
    if isinstance(c, CConst):
        return str(c.value) if c.value.denominator > 1 else str(c.value.numerator)
    if isinstance(c, CNeg):
        return f"~{format_cformula(c.body)}"
    if isinstance(c, CTruncSub):
        return f"({format_cformula(c.left)} -. {format_cformula(c.right)})"
    if isinstance(c, CHalf):
        return f"half({format_cformula(c.body)})"
    if isinstance(c, CMin):
        return f"min({format_cformula(c.left)}, {format_cformula(c.right)})"
    if isinstance(c, CMax):
        return f"max({format_cformula(c.left)}, {format_cformula(c.right)})"
    if isinstance(c, CMu):
        if isinstance(c.event, EvFormula):
            return f"mu[[ {format_formula(c.event.phi)} ]]"
        return f"mu[ {format_event(c.event)} ]"
    if isinstance(c, CDK):
        return f"dK({c.left}, {c.right})"
    if isinstance(c, CDB):
        return f"dB({format_event(c.left)}, {format_event(c.right)})"
    if isinstance(c, (CSup, CInf)):
        kw = "sup" if isinstance(c, CSup) else "inf"
        return f"{kw} {c.var} ({format_cformula(c.body)})"
    raise TypeError(f"not a continuous formula: {c!r}")


def format_event(e: EventTerm) -> str:
    if isinstance(e, EvFormula):
        return f"[[ {format_formula(e.phi)} ]]"
    if isinstance(e, EvTop):
        return "top"
    if isinstance(e, EvBot):
        return "bot"
    if isinstance(e, EvName):
        return e.name
    if isinstance(e, EvNot):
        return f"!({format_event(e.body)})"
    if isinstance(e, (EvMeet, EvJoin, EvSymDiff)):
        op = {EvMeet: "&", EvJoin: "|", EvSymDiff: "^"}[type(e)]
        return f"({format_event(e.left)} {op} {format_event(e.right)})"
    raise TypeError(f"not an event term: {e!r}")


# --- Evaluation -------------------------------------------------------------------

def _quantifier_depth(c: CFormula) -> int:
    if isinstance(c, (CConst, CDK)):
        return 0
    if isinstance(c, (CNeg, CHalf)):
        return _quantifier_depth(c.body)
    if isinstance(c, (CTruncSub, CMin, CMax)):
        return max(_quantifier_depth(c.left), _quantifier_depth(c.right))
    if isinstance(c, (CMu, CDB)):
        return 0
    if isinstance(c, (CSup, CInf)):
        return 1 + _quantifier_depth(c.body)
    raise TypeError(f"not a continuous formula: {c!r}")


def eval_event_term(
    rand: Randomization, e: EventTerm, env: Mapping[str, RandomElement | Event]
) -> Event:
    if isinstance(e, EvFormula):
        binding = {}
        for v in free_vars(e.phi):
            if v not in env or not isinstance(env[v], RandomElement):
                raise ValidationError(f"variable {v!r} is not a bound random element")
            binding[v] = env[v]
        return event_of(rand, e.phi, binding)
    if isinstance(e, EvTop):
        return rand.full_event()
    if isinstance(e, EvBot):
        return frozenset()
    if isinstance(e, EvName):
        val = env.get(e.name)
        if not isinstance(val, frozenset):
            raise ValidationError(f"{e.name!r} is not a bound event")
        return rand.check_event(val)
    if isinstance(e, EvNot):
        return rand.complement(eval_event_term(rand, e.body, env))
    left = eval_event_term(rand, e.left, env)
    right = eval_event_term(rand, e.right, env)
    if isinstance(e, EvMeet):
        return left & right
    if isinstance(e, EvJoin):
        return left | right
    return left ^ right


def eval_cformula(
    rand: Randomization,
    c: CFormula,
    env: Mapping[str, RandomElement | Event] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> Fraction:
    """Exact value of a continuous formula in [0, 1].

    sup/inf enumerate the full random-element sort; the total number of
    tuples that would be visited (carrier size to the power of the
    quantifier nesting depth) must stay within `budget`.
    """
    env = dict(env or {})
    depth = _quantifier_depth(c)
    if depth:
        required = rand.carrier_size() ** depth
        if required > budget:
            raise BudgetError("quantifier enumeration over budget", required)
    missing = [v for v in cformula_free_kvars(c) if v not in env]
    if missing:
        raise ValidationError(f"unbound variables {missing}")
    return _eval(rand, c, env)


def _eval(rand: Randomization, c: CFormula, env: dict) -> Fraction:
    if isinstance(c, CConst):
        return c.value
    if isinstance(c, CNeg):
        return 1 - _eval(rand, c.body, env)
    if isinstance(c, CTruncSub):
        return max(
            Fraction(0), _eval(rand, c.left, env) - _eval(rand, c.right, env)
        )
    if isinstance(c, CHalf):
        return _eval(rand, c.body, env) / 2
    if isinstance(c, CMin):
        return min(_eval(rand, c.left, env), _eval(rand, c.right, env))
    if isinstance(c, CMax):
        return max(_eval(rand, c.left, env), _eval(rand, c.right, env))
    if isinstance(c, CMu):
        return mu(rand, eval_event_term(rand, c.event, env))
    if isinstance(c, CDK):
        from .randomization import d_k

        f, g = env.get(c.left), env.get(c.right)
        if not isinstance(f, RandomElement) or not isinstance(g, RandomElement):
            raise ValidationError("dK arguments must be bound random elements")
        return d_k(rand, f, g)
    if isinstance(c, CDB):
        from .randomization import d_b

        return d_b(
            rand,
            eval_event_term(rand, c.left, env),
            eval_event_term(rand, c.right, env),
        )
    if isinstance(c, (CSup, CInf)):
        best: Fraction | None = None
        for h in rand.all_elements():
            val = _eval(rand, c.body, {**env, c.var: h})
            if best is None:
                best = val
            elif isinstance(c, CSup):
                best = max(best, val)
            else:
                best = min(best, val)
        assert best is not None
        return best
    raise TypeError(f"not a continuous formula: {c!r}")
