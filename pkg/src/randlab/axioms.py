"""Axiom checking for randomizations, with shipped formula corpora.

The exact axiom groups (validity, boolean, distance, fullness, event,
measure, transfer) are decided by exact rational identities.  Validity
ranges over all logically valid sentences, which has no finite
presentation, so it is checked against a corpus of tautologies and the
report says so; this is a deliberate under-approximation.  Atomlessness
cannot hold on a finite space: the checker reports the exact defect
  max_U min_V |mu(U /\\ V) - mu(U)/2|
and passes the group when the defect is at most half the smallest atom,
the value attained by dyadic bases (the defect vanishes under dyadic
refinement).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetError
from .formulas import (
    And,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Rel,
    Var,
    format_formula,
    free_vars,
    substitute,
)
from .randomization import (
    Randomization,
    RandomElement,
    d_b,
    d_k,
    event_of,
    event_witness,
    fullness_witness,
    mu,
)
from .structures import Signature

EXACT_GROUPS = (
    "validity",
    "boolean",
    "distance",
    "fullness",
    "event",
    "measure",
    "transfer",
)


# --- Corpora -------------------------------------------------------------------

def _base_atoms(sig: Signature) -> list[Formula]:
    vs = ["x", "y", "z"]
    atoms: list[Formula] = [
        Eq(Var("x"), Var("y")),
        Eq(Var("y"), Var("z")),
        Eq(Var("x"), Var("z")),
        Eq(Var("x"), Var("x")),
    ]
    for r in sorted(sig.relations):
        k = sig.relations[r]
        pool = list(itertools.product(vs[: max(1, min(3, k + 1))], repeat=k))
        for combo in pool[:6]:
            atoms.append(Rel(r, tuple(Var(v) for v in combo)))
    return atoms


def default_formula_corpus(sig: Signature, minimum: int = 40) -> list[Formula]:
    """A deterministic corpus of first-order formulas over the signature.

    Free variables are drawn from {x, y, z}; depth grows until the corpus
    reaches the requested size.
    """
    atoms = _base_atoms(sig)
    corpus: list[Formula] = []
    seen: set[str] = set()

    def push(phi: Formula) -> None:
        key = format_formula(phi)
        if key not in seen:
            seen.add(key)
            corpus.append(phi)

    cap = max(minimum + 20, 64)
    for a in atoms:
        push(a)
    for a in atoms:
        push(Not(a))
    for a, b in itertools.combinations(atoms, 2):
        if len(corpus) >= cap:
            break
        push(And(a, b))
        push(Or(a, b))
        push(Implies(a, b))
    quantifiable = [a for a in atoms if "z" in free_vars(a)] or [
        Eq(Var("z"), Var("x"))
    ]
    for a in quantifiable:
        push(Exists("z", a))
        push(Forall("z", a))
        push(Exists("z", And(a, Not(Eq(Var("z"), Var("x"))))))
        push(Forall("z", Or(a, Eq(Var("z"), Var("x")))))
    for a, b in itertools.combinations(atoms, 2):
        if len(corpus) >= max(minimum, 60):
            break
        push(Not(And(a, Not(b))))
        push(Or(Not(a), And(a, b)))
    if len(corpus) < minimum:
        for a, b, c in itertools.combinations(atoms, 3):
            push(And(a, Or(b, c)))
            if len(corpus) >= minimum:
                break
    return corpus


def tautology_corpus(sig: Signature) -> list[Formula]:
    """Logically valid formulas, used to spot-check the validity axioms."""
    atoms = _base_atoms(sig)
    a = atoms[0]
    b = atoms[1] if len(atoms) > 1 else Not(a)
    out: list[Formula] = [
        Or(a, Not(a)),
        Not(And(a, Not(a))),
        Implies(And(a, b), a),
        Implies(And(a, b), b),
        Implies(a, Or(a, b)),
        Implies(b, Or(a, b)),
        Implies(And(Implies(a, b), a), b),
        Implies(Not(Not(a)), a),
        Implies(a, Not(Not(a))),
        Or(Implies(a, b), Implies(b, a)),
        Implies(Not(Or(a, b)), And(Not(a), Not(b))),
        Implies(And(Not(a), Not(b)), Not(Or(a, b))),
        Eq(Var("x"), Var("x")),
        Forall("w", Eq(Var("w"), Var("w"))),
        Exists("w", Eq(Var("w"), Var("x"))),
    ]
    # quantifier schemas: (forall w phi(w)) -> phi(x), phi(x) -> exists w phi(w)
    unary = substitute(a, {v: Var("w") for v in sorted(free_vars(a))[:1]})
    if "w" in free_vars(unary):
        inst = substitute(unary, {"w": Var("x")})
        out.append(Implies(Forall("w", unary), inst))
        out.append(Implies(inst, Exists("w", unary)))
    return out


def sentence_corpus(sig: Signature, limit: int = 12) -> list[Formula]:
    """Sentences (universal closures of corpus formulas) for transfer checks."""
    out = []
    for phi in default_formula_corpus(sig)[:limit]:
        closed = phi
        for v in sorted(free_vars(phi), reverse=True):
            closed = Forall(v, closed)
        out.append(closed)
        existential = phi
        for v in sorted(free_vars(phi), reverse=True):
            existential = Exists(v, existential)
        out.append(existential)
    return out


# --- Report --------------------------------------------------------------------

@dataclass
class AxiomVerdict:
    group: str
    passed: bool
    detail: str = ""


@dataclass
class AxiomReport:
    verdicts: list[AxiomVerdict] = field(default_factory=list)
    atomless_defect: Fraction | None = None

    def by_group(self, group: str) -> AxiomVerdict:
        for v in self.verdicts:
            if v.group == group:
                return v
        raise KeyError(group)

    def exact_groups_pass(self) -> bool:
        return all(self.by_group(g).passed for g in EXACT_GROUPS)

    def all_pass(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def lines(self) -> list[str]:
        return [
            f"{'PASS' if v.passed else 'FAIL'} axiom-{v.group} {v.detail}".rstrip()
            for v in self.verdicts
        ]


# --- Element sampling ------------------------------------------------------------

def sample_elements(
    rand: Randomization, count: int, seed: int = 2024
) -> list[RandomElement]:
    """Deterministic pool of random elements: constants first, then seeded draws."""
    rng = random.Random(seed)
    min_size = min(m.size for m in rand.family.values())
    pool = [RandomElement.constant(rand.base, a) for a in range(min(2, min_size))]
    while len(pool) < count:
        values = {w: rng.randrange(rand.family[w].size) for w in rand.base.points}
        pool.append(RandomElement(rand.base, values))
    return pool[:count]


def _bindings_for(
    phi: Formula, pool: list[RandomElement], rng: random.Random, count: int
) -> list[dict[str, RandomElement]]:
    fv = sorted(free_vars(phi))
    out = []
    for _ in range(count):
        out.append({v: rng.choice(pool) for v in fv})
    return out


# --- Atomless defect --------------------------------------------------------------

def atomless_defect(rand: Randomization, hard_limit: int = 12) -> Fraction:
    """max over events U of the distance from mu(U)/2 to the masses of
    subevents of U.  Closed form for uniform bases; exhaustive otherwise."""
    weights = [rand.base.weight[p] for p in rand.base.points]
    n = len(weights)
    if len(set(weights)) == 1:
        # all subset masses are multiples of the atom; odd-sized events
        # (always present) miss their half by exactly half an atom
        return weights[0] / 2
    if n > hard_limit:
        raise BudgetError("atomless defect on a large non-uniform base", 2**n)
    worst = Fraction(0)
    for mask in range(1, 2**n):
        atoms = [weights[i] for i in range(n) if mask >> i & 1]
        target = sum(atoms, Fraction(0)) / 2
        sums = {Fraction(0)}
        for a in atoms:
            sums |= {s + a for s in sums}
        best = min(abs(s - target) for s in sums)
        worst = max(worst, best)
    return worst


# --- The checker -------------------------------------------------------------------

def check_axioms(
    rand: Randomization,
    corpus: list[Formula] | None = None,
    seed: int = 2024,
    event_budget: int = 1 << 17,
) -> AxiomReport:
    sig = rand.signature
    corpus = corpus if corpus is not None else default_formula_corpus(sig)
    rng = random.Random(seed)
    pool = sample_elements(rand, 6, seed=seed)
    report = AxiomReport()
    top = rand.full_event()

    # Validity: tautologies evaluate to the sure event under any binding.
    failures = []
    for phi in tautology_corpus(sig):
        for binding in _bindings_for(phi, pool, rng, 3):
            if event_of(rand, phi, binding) != top:
                failures.append(format_formula(phi))
                break
    report.verdicts.append(
        AxiomVerdict(
            "validity",
            not failures,
            failures[0] if failures else "tautology corpus, per-point evaluation",
        )
    )

    # Boolean: connectives on events, plus lattice laws for the event sort.
    ok = True
    detail = ""
    for phi, psi in zip(corpus, corpus[1:] + corpus[:1]):
        joint_vars = sorted(free_vars(phi) | free_vars(psi))
        binding = {v: pool[i % len(pool)] for i, v in enumerate(joint_vars)}
        e_phi = event_of(rand, phi, binding)
        e_psi = event_of(rand, psi, binding)
        checks = [
            event_of(rand, Not(phi), binding) == top - e_phi,
            event_of(rand, Or(phi, psi), binding) == e_phi | e_psi,
            event_of(rand, And(phi, psi), binding) == e_phi & e_psi,
        ]
        if not all(checks):
            ok = False
            detail = f"connective identity failed for {format_formula(phi)}"
            break
    if ok:
        pts = list(rand.base.points)
        for _ in range(32):
            u = frozenset(p for p in pts if rng.random() < 0.5)
            v = frozenset(p for p in pts if rng.random() < 0.5)
            w = frozenset(p for p in pts if rng.random() < 0.5)
            laws = [
                u | v == v | u,
                u & v == v & u,
                (u | v) | w == u | (v | w),
                u & (v | w) == (u & v) | (u & w),
                top - (u | v) == (top - u) & (top - v),
            ]
            if not all(laws):
                ok = False
                detail = "lattice law failed"
                break
    report.verdicts.append(AxiomVerdict("boolean", ok, detail))

    # Distance: the two defining identities plus pseudo-metric laws.
    ok = True
    detail = ""
    eq_xy = Eq(Var("x"), Var("y"))
    for f in pool:
        for g in pool:
            lhs = d_k(rand, f, g)
            rhs = 1 - mu(rand, event_of(rand, eq_xy, {"x": f, "y": g}))
            if lhs != rhs or lhs != d_k(rand, g, f):
                ok = False
                detail = "d_K identity failed"
    for _ in range(16):
        pts = list(rand.base.points)
        u = frozenset(p for p in pts if rng.random() < 0.5)
        v = frozenset(p for p in pts if rng.random() < 0.5)
        w = frozenset(p for p in pts if rng.random() < 0.5)
        if d_b(rand, u, v) != mu(rand, u ^ v) or d_b(rand, u, w) > d_b(
            rand, u, v
        ) + d_b(rand, v, w):
            ok = False
            detail = "d_B identity or triangle failed"
    for f, g, h in itertools.combinations(pool, 3):
        if d_k(rand, f, h) > d_k(rand, f, g) + d_k(rand, g, h):
            ok = False
            detail = "d_K triangle failed"
    report.verdicts.append(AxiomVerdict("distance", ok, detail))

    # Fullness: exact witnesses for every corpus formula with x free.
    ok = True
    detail = ""
    for phi in corpus:
        if "x" not in free_vars(phi):
            continue
        rest = sorted(free_vars(phi) - {"x"})
        for binding in (
            {v: rng.choice(pool) for v in rest} for _ in range(2)
        ):
            f = fullness_witness(rand, phi, "x", binding)
            lhs = event_of(rand, phi, {**binding, "x": f})
            rhs = event_of(rand, Exists("x", phi), binding)
            if lhs != rhs:
                ok = False
                detail = f"witness inexact for {format_formula(phi)}"
                break
        if not ok:
            break
    report.verdicts.append(AxiomVerdict("fullness", ok, detail))

    # Event: every event is an equality event, exactly.
    ok = True
    detail = ""
    n_pts = len(rand.base.points)
    if 2**n_pts <= event_budget:
        events = rand.all_events(budget=event_budget)
        total = 2**n_pts
    else:
        pts = list(rand.base.points)
        events = (
            frozenset(p for p in pts if rng.random() < 0.5) for _ in range(512)
        )
        total = 512
    for e in events:
        f, g = event_witness(rand, e)
        if event_of(rand, eq_xy, {"x": f, "y": g}) != e:
            ok = False
            detail = f"witness inexact for event of mass {mu(rand, e)}"
            break
    report.verdicts.append(
        AxiomVerdict("event", ok, detail or f"{total} events, exact witnesses")
    )

    # Measure: normalisation and the modular law.
    ok = mu(rand, top) == 1 and mu(rand, frozenset()) == 0
    detail = "" if ok else "normalisation failed"
    pts = list(rand.base.points)
    for _ in range(64):
        u = frozenset(p for p in pts if rng.random() < 0.5)
        v = frozenset(p for p in pts if rng.random() < 0.5)
        if mu(rand, u) + mu(rand, v) != mu(rand, u | v) + mu(rand, u & v):
            ok = False
            detail = "modular law failed"
            break
    report.verdicts.append(AxiomVerdict("measure", ok, detail))

    # Atomless: exact defect against the half-minimum-atom threshold.
    defect = atomless_defect(rand)
    min_atom = min(rand.base.weight.values())
    report.atomless_defect = defect
    report.verdicts.append(
        AxiomVerdict(
            "atomless",
            defect <= min_atom / 2,
            f"defect {defect} vs threshold {min_atom / 2}",
        )
    )

    # Transfer: sentences true (false) in every fiber get measure 1 (0).
    ok = True
    detail = ""
    from .semantics import eval_formula

    for sigma in sentence_corpus(sig):
        truth = [eval_formula(rand.family[w], sigma, {}) for w in rand.base.points]
        value = mu(rand, event_of(rand, sigma, {}))
        if all(truth) and value != 1:
            ok, detail = False, f"true sentence got measure {value}"
        elif not any(truth) and value != 0:
            ok, detail = False, f"false sentence got measure {value}"
        elif value != rand.base.mass(
            [w for w, t in zip(rand.base.points, truth) if t]
        ):
            ok, detail = False, "sentence event mismatch"
    report.verdicts.append(AxiomVerdict("transfer", ok, detail))

    return report
