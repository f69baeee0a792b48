"""Named-object workspace with a flat text format and exact round-tripping.

A workspace file is a sequence of declarations:

    structure m2 { universe = 2; }
    space s4 { weights = [1/4, 1/4, 1/4, 1/4]; }
    randomization r1 { structure = m2; space = s4; }
    randomization r2 { structures = [m2, m2]; space = s2; }
    element f = r1 [0, 1, 0, 1];
    event e1 = r1 {0, 2};
    rmeasure nu { structure = m2; arity = 1; params = (); rtype { q0: 1 }; }

Sample points are the indices 0..n-1 in canonical order; elements and
events refer to them positionally, so saving re-canonicalises internally
refined bases without losing any measure or value.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import ParseError, ResolutionError, ValidationError
from .measure import FinProbSpace
from .randomization import Event, RandomElement, Randomization
from .rtypes import RMeasure
from .semantics import type_space
from .structures import FinStructure, _Tok, format_structure, parse_structure_body


class Workspace:
    def __init__(self):
        self.structures: dict[str, FinStructure] = {}
        self.spaces: dict[str, FinProbSpace] = {}
        self.randomizations: dict[str, Randomization] = {}
        self.elements: dict[str, tuple[str, RandomElement]] = {}
        self.events: dict[str, tuple[str, Event]] = {}
        self.rmeasures: dict[str, RMeasure] = {}
        self._space_names: dict[str, str] = {}  # randomization -> space name
        self._structure_names: dict[str, list[str]] = {}

    # -- lookups -------------------------------------------------------------

    def _get(self, table: dict, name: str, kind: str):
        if name not in table:
            raise ResolutionError(f"unknown {kind} {name!r}")
        return table[name]

    def structure(self, name: str) -> FinStructure:
        return self._get(self.structures, name, "structure")

    def space(self, name: str) -> FinProbSpace:
        return self._get(self.spaces, name, "space")

    def randomization(self, name: str) -> Randomization:
        return self._get(self.randomizations, name, "randomization")

    def element(self, name: str) -> tuple[str, RandomElement]:
        return self._get(self.elements, name, "element")

    def event(self, name: str) -> tuple[str, Event]:
        return self._get(self.events, name, "event")

    def rmeasure(self, name: str) -> RMeasure:
        return self._get(self.rmeasures, name, "rmeasure")

    def _fresh(self, name: str) -> None:
        for table in (
            self.structures,
            self.spaces,
            self.randomizations,
            self.elements,
            self.events,
            self.rmeasures,
        ):
            if name in table:
                raise ValidationError(f"name {name!r} already in use")


_FRACTION = re.compile(r"-?\d+(\s*/\s*\d+)?")


def _read_fraction(tk: _Tok) -> Fraction:
    m = _FRACTION.match(tk.text[tk.pos :].lstrip())
    if not m:
        raise ParseError("expected a rational", tk.pos)
    skip = len(tk.text[tk.pos :]) - len(tk.text[tk.pos :].lstrip())
    tk.pos += skip + m.end()
    return Fraction(m.group(0).replace(" ", ""))


def load_workspace(text: str) -> Workspace:
    ws = Workspace()
    tk = _Tok(text)
    while True:
        tok = tk.peek()
        if tok is None:
            return ws
        kind = tk.expect_kind("name")
        if kind == "structure":
            name = tk.expect_kind("name")
            ws._fresh(name)
            ws.structures[name] = parse_structure_body(tk, name)
        elif kind == "space":
            name = tk.expect_kind("name")
            ws._fresh(name)
            tk.expect("{")
            tk.expect("weights")
            tk.expect("=")
            tk.expect("[")
            weights = []
            while True:
                nxt = tk.peek()
                if nxt is not None and nxt[1] == "]":
                    tk.next()
                    break
                if weights:
                    tk.expect(",")
                weights.append(_read_fraction(tk))
            nxt = tk.peek()
            if nxt is not None and nxt[1] == ";":
                tk.next()
            tk.expect("}")
            ws.spaces[name] = FinProbSpace(list(enumerate(weights)))
        elif kind == "randomization":
            name = tk.expect_kind("name")
            ws._fresh(name)
            tk.expect("{")
            structure_names: list[str] = []
            space_name = None
            while True:
                tok2 = tk.next()
                if tok2 is None:
                    raise ParseError("unterminated randomization block", tk.pos)
                if tok2[1] == "}":
                    break
                if tok2[1] == ";":
                    continue
                if tok2[1] == "structure":
                    tk.expect("=")
                    structure_names = [tk.expect_kind("name")]
                elif tok2[1] == "structures":
                    tk.expect("=")
                    tk.expect("[")
                    structure_names = []
                    while True:
                        nxt = tk.peek()
                        if nxt is not None and nxt[1] == "]":
                            tk.next()
                            break
                        if structure_names:
                            tk.expect(",")
                        structure_names.append(tk.expect_kind("name"))
                elif tok2[1] == "space":
                    tk.expect("=")
                    space_name = tk.expect_kind("name")
                else:
                    raise ParseError(f"unknown key {tok2[1]!r}", tk.pos)
            if space_name is None or not structure_names:
                raise ParseError(f"randomization {name} needs structure(s) and space", tk.pos)
            base = ws.space(space_name)
            if len(structure_names) == 1:
                family = {
                    w: ws.structure(structure_names[0]) for w in base.points
                }
            else:
                if len(structure_names) != len(base.points):
                    raise ValidationError(
                        f"randomization {name}: {len(structure_names)} structures "
                        f"for {len(base.points)} points"
                    )
                family = {
                    w: ws.structure(s)
                    for w, s in zip(base.points, structure_names)
                }
            ws.randomizations[name] = Randomization(base, family)
            ws._space_names[name] = space_name
            ws._structure_names[name] = structure_names
        elif kind == "element":
            name = tk.expect_kind("name")
            ws._fresh(name)
            tk.expect("=")
            rand_name = tk.expect_kind("name")
            rand = ws.randomization(rand_name)
            tk.expect("[")
            values = []
            while True:
                nxt = tk.peek()
                if nxt is not None and nxt[1] == "]":
                    tk.next()
                    break
                if values:
                    tk.expect(",")
                values.append(int(tk.expect_kind("int")))
            nxt = tk.peek()
            if nxt is not None and nxt[1] == ";":
                tk.next()
            if len(values) != len(rand.base.points):
                raise ValidationError(
                    f"element {name}: {len(values)} values for "
                    f"{len(rand.base.points)} points"
                )
            ws.elements[name] = (rand_name, rand.element(values))
        elif kind == "event":
            name = tk.expect_kind("name")
            ws._fresh(name)
            tk.expect("=")
            rand_name = tk.expect_kind("name")
            rand = ws.randomization(rand_name)
            tk.expect("{")
            indices = []
            while True:
                nxt = tk.peek()
                if nxt is not None and nxt[1] == "}":
                    tk.next()
                    break
                if indices:
                    tk.expect(",")
                indices.append(int(tk.expect_kind("int")))
            nxt = tk.peek()
            if nxt is not None and nxt[1] == ";":
                tk.next()
            pts = rand.base.points
            for i in indices:
                if not 0 <= i < len(pts):
                    raise ValidationError(f"event {name}: index {i} out of range")
            ws.events[name] = (rand_name, frozenset(pts[i] for i in indices))
        elif kind == "rmeasure":
            name = tk.expect_kind("name")
            ws._fresh(name)
            tk.expect("{")
            st_name = None
            arity = None
            params: tuple[int, ...] = ()
            weights: dict[int, Fraction] = {}
            while True:
                tok2 = tk.next()
                if tok2 is None:
                    raise ParseError("unterminated rmeasure block", tk.pos)
                if tok2[1] == "}":
                    break
                if tok2[1] == ";":
                    continue
                if tok2[1] == "structure":
                    tk.expect("=")
                    st_name = tk.expect_kind("name")
                elif tok2[1] == "arity":
                    tk.expect("=")
                    arity = int(tk.expect_kind("int"))
                elif tok2[1] == "params":
                    tk.expect("=")
                    tk.expect("(")
                    plist = []
                    while True:
                        nxt = tk.peek()
                        if nxt is not None and nxt[1] == ")":
                            tk.next()
                            break
                        if plist:
                            tk.expect(",")
                        plist.append(int(tk.expect_kind("int")))
                    params = tuple(plist)
                elif tok2[1] == "rtype":
                    tk.expect("{")
                    while True:
                        nxt = tk.peek()
                        if nxt is not None and nxt[1] == "}":
                            tk.next()
                            break
                        if weights:
                            tk.expect(",")
                        qname = tk.expect_kind("name")
                        if not re.fullmatch(r"q\d+", qname):
                            raise ParseError(f"expected qN, got {qname!r}", tk.pos)
                        tk.expect(":")
                        weights[int(qname[1:])] = _read_fraction(tk)
                else:
                    raise ParseError(f"unknown key {tok2[1]!r}", tk.pos)
            if st_name is None or arity is None:
                raise ParseError(f"rmeasure {name} needs structure and arity", tk.pos)
            space = type_space(ws.structure(st_name), arity, params)
            ws.rmeasures[name] = RMeasure(
                space,
                {
                    space.types[i]: w
                    for i, w in weights.items()
                    if 0 <= i < len(space.types)
                },
            )
        else:
            raise ParseError(f"unknown declaration {kind!r}", tk.pos)


def save_workspace(ws: Workspace) -> str:
    out = []
    for name, st in ws.structures.items():
        body = format_structure(st)
        out.append(body.replace(f"structure {st.name or 'unnamed'}", f"structure {name}", 1))
    for name, sp in ws.spaces.items():
        ws_weights = ", ".join(str(sp.weight[p]) for p in sp.points)
        out.append(f"space {name} {{ weights = [{ws_weights}]; }}")
    for name, rand in ws.randomizations.items():
        space_name = ws._space_names.get(name)
        st_names = ws._structure_names.get(name)
        if space_name is None or st_names is None:
            raise ValidationError(f"randomization {name} has no named parts")
        if len(st_names) == 1:
            out.append(
                f"randomization {name} {{ structure = {st_names[0]}; space = {space_name}; }}"
            )
        else:
            out.append(
                f"randomization {name} {{ structures = [{', '.join(st_names)}]; "
                f"space = {space_name}; }}"
            )
    for name, (rand_name, el) in ws.elements.items():
        rand = ws.randomization(rand_name)
        values = ", ".join(str(el(p)) for p in rand.base.points)
        out.append(f"element {name} = {rand_name} [{values}];")
    for name, (rand_name, ev) in ws.events.items():
        rand = ws.randomization(rand_name)
        idx = sorted(i for i, p in enumerate(rand.base.points) if p in ev)
        out.append(f"event {name} = {rand_name} {{{', '.join(map(str, idx))}}};")
    for name, nu in ws.rmeasures.items():
        st = nu.space.structure
        st_name = next(
            (n for n, s in ws.structures.items() if s == st), None
        )
        if st_name is None:
            raise ValidationError(f"rmeasure {name} refers to an unnamed structure")
        params = ", ".join(map(str, nu.space.params))
        entries = ", ".join(
            f"q{q.index}: {w}" for q, w in nu.weights.items() if w > 0
        )
        out.append(
            f"rmeasure {name} {{ structure = {st_name}; arity = {nu.space.arity}; "
            f"params = ({params}); rtype {{ {entries} }}; }}"
        )
    return "\n".join(out) + "\n"
