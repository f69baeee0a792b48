"""Tarskian evaluation, automorphism groups, and classical type spaces.

Types of tuples are represented semantically as orbits of the
automorphism group fixing the parameters pointwise: over a finite
structure, two tuples satisfy the same formulas with parameters in A
exactly when some automorphism over A maps one to the other.  Isolating
formulas are synthesised on demand and are not stored on the type.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .errors import ValidationError
from .formulas import (
    And,
    App,
    Const,
    Elem,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Rel,
    Term,
    TypeIs,
    Var,
    conj,
    disj,
)
from .structures import FinStructure


def eval_term(m: FinStructure, t: Term, val: dict[str, int]) -> int:
    if isinstance(t, Var):
        if t.name not in val:
            raise ValidationError(f"unassigned free variable {t.name!r}")
        return val[t.name]
    if isinstance(t, Elem):
        if not 0 <= t.value < m.size:
            raise ValidationError(f"element literal #{t.value} out of range")
        return t.value
    if isinstance(t, Const):
        return m.constant(t.name)
    return m.apply(t.func, tuple(eval_term(m, a, val) for a in t.args))


def eval_formula(m: FinStructure, phi: Formula, val: dict[str, int]) -> bool:
    """Classical satisfaction; quantifiers range over the whole universe."""
    if isinstance(phi, Eq):
        return eval_term(m, phi.left, val) == eval_term(m, phi.right, val)
    if isinstance(phi, Rel):
        return m.holds(phi.name, tuple(eval_term(m, a, val) for a in phi.args))
    if isinstance(phi, Not):
        return not eval_formula(m, phi.body, val)
    if isinstance(phi, And):
        return eval_formula(m, phi.left, val) and eval_formula(m, phi.right, val)
    if isinstance(phi, Or):
        return eval_formula(m, phi.left, val) or eval_formula(m, phi.right, val)
    if isinstance(phi, Implies):
        return (not eval_formula(m, phi.left, val)) or eval_formula(m, phi.right, val)
    if isinstance(phi, Exists):
        return any(
            eval_formula(m, phi.body, {**val, phi.var: a}) for a in m.elements
        )
    if isinstance(phi, Forall):
        return all(
            eval_formula(m, phi.body, {**val, phi.var: a}) for a in m.elements
        )
    if isinstance(phi, TypeIs):
        if phi.space.structure != m:
            raise ValidationError("TypeIs atom evaluated in a foreign structure")
        tup = tuple(eval_term(m, a, val) for a in phi.args)
        return phi.space.index_of(tup) == phi.type_id.index
    raise TypeError(f"not a formula: {phi!r}")


# --- Automorphisms -----------------------------------------------------------

def _invariant_signature(m: FinStructure, a: int) -> tuple:
    """Cheap per-element invariant used to seed the partition refinement."""
    consts = tuple(sorted(s for s, v in m.const_values.items() if v == a))
    rel_prof = []
    for sym in sorted(m.rel_tables):
        table = m.rel_tables[sym]
        k = m.signature.relations[sym]
        counts = tuple(
            sum(1 for t in table if t[i] == a) for i in range(k)
        )
        rel_prof.append((sym, counts))
    fn_prof = []
    for sym in sorted(m.fn_tables):
        table = m.fn_tables[sym]
        fn_prof.append((sym, sum(1 for v in table.values() if v == a)))
    return (consts, tuple(rel_prof), tuple(fn_prof))


def _refine_classes(m: FinStructure, fix: frozenset[int]) -> list[int]:
    """Partition-refinement colouring; automorphic elements share a colour."""
    colour = {}
    seed: dict[tuple, int] = {}
    for a in m.elements:
        key: tuple = ("fixed", a) if a in fix else ("free", _invariant_signature(m, a))
        colour[a] = seed.setdefault(key, len(seed))
    while True:
        sigs = {}
        for a in m.elements:
            rel_sig = []
            for sym in sorted(m.rel_tables):
                k = m.signature.relations[sym]
                if k == 0:
                    continue
                hits = sorted(
                    tuple(colour[e] for e in t)
                    for t in m.rel_tables[sym]
                    if a in t
                )
                rel_sig.append((sym, tuple(hits)))
            fn_sig = []
            for sym in sorted(m.fn_tables):
                img = sorted(
                    (tuple(colour[e] for e in args), colour[v])
                    for args, v in m.fn_tables[sym].items()
                    if a in args or v == a
                )
                fn_sig.append((sym, tuple(img)))
            sigs[a] = (colour[a], tuple(rel_sig), tuple(fn_sig))
        fresh: dict[tuple, int] = {}
        new_colour = {a: fresh.setdefault(sigs[a], len(fresh)) for a in m.elements}
        if len(set(new_colour.values())) == len(set(colour.values())):
            return [colour[a] for a in m.elements]
        colour = new_colour


def _is_partial_ok(m: FinStructure, img: list[int | None]) -> bool:
    assigned = [a for a in m.elements if img[a] is not None]
    for sym, table in m.rel_tables.items():
        k = m.signature.relations[sym]
        for t in itertools.product(assigned, repeat=k):
            mapped = tuple(img[e] for e in t)
            if (t in table) != (mapped in table):
                return False
    for sym, table in m.fn_tables.items():
        k = m.signature.functions[sym]
        for args in itertools.product(assigned, repeat=k):
            v = table[args]
            if img[v] is not None and table[tuple(img[e] for e in args)] != img[v]:
                return False
    for v in m.const_values.values():
        if img[v] is not None and img[v] != v:
            return False
    return True


@lru_cache(maxsize=None)
def _automorphisms_cached(m: FinStructure, fix: frozenset[int]) -> tuple[tuple[int, ...], ...]:
    for a in fix:
        if a not in m.elements:
            raise ValidationError(f"fixed element {a} not in universe")
    colours = _refine_classes(m, fix)
    out: list[tuple[int, ...]] = []
    img: list[int | None] = [None] * m.size

    def backtrack(a: int) -> None:
        if a == m.size:
            out.append(tuple(img))  # type: ignore[arg-type]
            return
        used = {b for b in img if b is not None}
        candidates = [a] if a in fix else [
            b for b in m.elements if colours[b] == colours[a] and b not in used
        ]
        for b in candidates:
            img[a] = b
            if _is_partial_ok(m, img):
                backtrack(a + 1)
            img[a] = None

    backtrack(0)
    return tuple(sorted(out))


def automorphisms(m: FinStructure, fix: frozenset[int] | set[int] = frozenset()) -> list[tuple[int, ...]]:
    """All automorphisms of `m` fixing `fix` pointwise, sorted."""
    return list(_automorphisms_cached(m, frozenset(fix)))


# --- Type spaces --------------------------------------------------------------

@dataclass(frozen=True)
class TypeId:
    """One orbit: canonical (lexicographically least) representative + index."""

    rep: tuple[int, ...]
    index: int

    def __str__(self):
        return f"q{self.index}"


class TypeSpace:
    """The orbits of Aut(M/A) acting on M^n, in canonical order.

    Canonical order sorts orbits by their lexicographically least member,
    so output is deterministic across runs.
    """

    def __init__(self, structure: FinStructure, arity: int, params: tuple[int, ...]):
        self.structure = structure
        self.arity = arity
        self.params = params
        group = automorphisms(structure, frozenset(params))
        assign: dict[tuple[int, ...], int] = {}
        reps: list[tuple[int, ...]] = []
        for tup in itertools.product(structure.elements, repeat=arity):
            if tup in assign:
                continue
            orbit = {tuple(sigma[e] for e in tup) for sigma in group}
            rep = min(orbit)
            idx = len(reps)
            reps.append(rep)
            for member in orbit:
                assign[member] = idx
        order = sorted(range(len(reps)), key=lambda i: reps[i])
        rank = {old: new for new, old in enumerate(order)}
        self.types: tuple[TypeId, ...] = tuple(
            TypeId(reps[old], new) for new, old in enumerate(order)
        )
        self._assign = {tup: rank[idx] for tup, idx in assign.items()}

    def __len__(self):
        return len(self.types)

    def __iter__(self):
        return iter(self.types)

    def index_of(self, tup: tuple[int, ...]) -> int:
        if len(tup) != self.arity:
            raise ValidationError(
                f"tuple arity {len(tup)} does not match type space arity {self.arity}"
            )
        return self._assign[tuple(tup)]

    def type_of(self, tup: tuple[int, ...]) -> TypeId:
        return self.types[self.index_of(tup)]

    def orbit(self, q: TypeId) -> list[tuple[int, ...]]:
        return sorted(t for t, i in self._assign.items() if i == q.index)

    def same_space(self, other: "TypeSpace") -> bool:
        return (
            self.structure == other.structure
            and self.arity == other.arity
            and self.params == other.params
        )

    def __eq__(self, other):
        return isinstance(other, TypeSpace) and self.same_space(other)

    def __hash__(self):
        return hash((self.structure, self.arity, self.params))

    def __repr__(self):
        return (
            f"TypeSpace({self.structure!r}, n={self.arity}, "
            f"A={self.params}, |S|={len(self.types)})"
        )


@lru_cache(maxsize=None)
def _type_space_cached(m: FinStructure, n: int, params: tuple[int, ...]) -> TypeSpace:
    return TypeSpace(m, n, params)


def type_space(m: FinStructure, n: int, params: tuple[int, ...] | list[int] = ()) -> TypeSpace:
    """S_n over the parameter tuple `params` (types = Aut(M/A)-orbits)."""
    ptup = tuple(params)
    for a in ptup:
        if a not in m.elements:
            raise ValidationError(f"parameter {a} not in universe")
    return _type_space_cached(m, n, ptup)


def type_of_tuple(m: FinStructure, tup: tuple[int, ...], params: tuple[int, ...] | list[int] = ()) -> TypeId:
    return type_space(m, len(tup), params).type_of(tuple(tup))


# --- Isolating formulas --------------------------------------------------------

def _literal_pool(m: FinStructure, variables: tuple[str, ...], params: tuple[int, ...]) -> list[Formula]:
    """Depth-one atoms over the given variables, parameters, and constants."""
    terms: list[Term] = [Var(v) for v in variables]
    terms += [Elem(a) for a in params]
    terms += [Const(c) for c in sorted(m.const_values)]
    base = list(terms)
    for f in sorted(m.fn_tables):
        k = m.signature.functions[f]
        for args in itertools.product(base, repeat=k):
            terms.append(App(f, args))
    atoms: list[Formula] = []
    for i, t1 in enumerate(terms):
        for t2 in terms[i + 1 :]:
            atoms.append(Eq(t1, t2))
    for r in sorted(m.rel_tables):
        k = m.signature.relations[r]
        for args in itertools.product(terms, repeat=k):
            atoms.append(Rel(r, args))
    return atoms


def _extension(m: FinStructure, phi: Formula, variables: tuple[str, ...]) -> frozenset[tuple[int, ...]]:
    out = set()
    for tup in itertools.product(m.elements, repeat=len(variables)):
        if eval_formula(m, phi, dict(zip(variables, tup))):
            out.add(tup)
    return frozenset(out)


def _minimize_conjunction(
    m: FinStructure,
    parts: list[Formula],
    variables: tuple[str, ...],
    target: frozenset[tuple[int, ...]],
) -> Formula:
    kept = list(parts)
    i = 0
    while i < len(kept):
        trial = kept[:i] + kept[i + 1 :]
        if trial and _extension(m, conj(trial), variables) == target:
            kept = trial
        else:
            i += 1
    return conj(kept)


def isolating_formula(space: TypeSpace, q: TypeId) -> Formula:
    """A formula (parameters from A allowed) whose extension is exactly q's orbit.

    Strategy: try the quantifier-free depth-one diagram of the canonical
    representative first; if that is too coarse, walk up the back-and-forth
    hierarchy, attaching one-step extension and covering conjuncts until the
    extension matches the orbit.  The result is then greedily pruned.
    """
    m = space.structure
    n = space.arity
    if n < 1:
        raise ValidationError("isolating formulas need at least one variable")
    variables = tuple(f"x{i}" for i in range(n))
    target = frozenset(space.orbit(q))
    rep = q.rep

    pool = _literal_pool(m, variables, space.params)
    literals: list[Formula] = []
    for atom in pool:
        val = dict(zip(variables, rep))
        literals.append(atom if eval_formula(m, atom, val) else Not(atom))
    if not literals:
        literals = [Eq(Var(variables[0]), Var(variables[0]))]
    if _extension(m, conj(literals), variables) == target:
        return _minimize_conjunction(m, literals, variables, target)

    # Back-and-forth levels: formulas are built for every orbit of extended
    # tuples and reused, so construction is polynomial in the orbit count.
    def qf_formula(tup: tuple[int, ...], varnames: tuple[str, ...]) -> list[Formula]:
        out = []
        val = dict(zip(varnames, tup))
        for atom in _literal_pool(m, varnames, space.params):
            out.append(atom if eval_formula(m, atom, val) else Not(atom))
        return out

    max_rank = m.size
    for rank in range(1, max_rank + 1):
        formula = _hintikka(m, space.params, rep, variables, rank, qf_formula, {})
        if _extension(m, formula, variables) == target:
            parts = _flatten_and(formula)
            return _minimize_conjunction(m, parts, variables, target)
    raise AssertionError("back-and-forth rank |M| must isolate every orbit")


def _flatten_and(phi: Formula) -> list[Formula]:
    if isinstance(phi, And):
        return _flatten_and(phi.left) + _flatten_and(phi.right)
    return [phi]


def _hintikka(
    m: FinStructure,
    params: tuple[int, ...],
    tup: tuple[int, ...],
    varnames: tuple[str, ...],
    rank: int,
    qf_formula,
    memo: dict,
) -> Formula:
    key = (rank, varnames, type_of_tuple(m, tup, params).index, len(tup))
    # orbit index determines the formula up to the variable names used
    if key in memo:
        return memo[key]
    parts = qf_formula(tuple(tup), varnames)
    if rank > 0:
        fresh = f"z{len(varnames)}"
        inner_vars = varnames + (fresh,)
        seen: dict[int, Formula] = {}
        for b in m.elements:
            ext = tuple(tup) + (b,)
            idx = type_of_tuple(m, ext, params).index
            if idx not in seen:
                seen[idx] = _hintikka(
                    m, params, ext, inner_vars, rank - 1, qf_formula, memo
                )
        options = []
        for i in sorted(seen):
            if seen[i] not in options:
                options.append(seen[i])
        for opt in options:
            parts.append(Exists(fresh, opt))
        parts.append(Forall(fresh, disj(options)))
    result = conj(parts)
    memo[key] = result
    return result
