"""Randomizations of finite structures over finite probability spaces.

A randomization bundles a base space with one structure per sample point
(all over one signature).  The random-element sort is implicitly the full
product of the per-point universes, so the Fullness and Event axioms hold
with exact witnesses, and every random element here is simple (finite
range).  Events are plain subsets of the base.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import BudgetError, ValidationError
from .formulas import Formula, free_vars
from .measure import FinProbSpace, Point, frac
from .semantics import eval_formula
from .structures import FinStructure

Event = frozenset


class RandomElement:
    """A map from sample points to elements of the per-point structures."""

    def __init__(self, base: FinProbSpace, values: Mapping[Point, int]):
        self.base = base
        self.values = {p: values[p] for p in base.points}
        if len(self.values) != len(base.points):
            raise ValidationError("random element not total on the base")

    def __call__(self, w: Point) -> int:
        return self.values[w]

    @classmethod
    def constant(cls, base: FinProbSpace, a: int) -> "RandomElement":
        return cls(base, {w: a for w in base.points})

    def _key(self):
        return (self.base._key(), tuple(self.values[p] for p in self.base.points))

    def __eq__(self, other):
        return isinstance(other, RandomElement) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        vals = ", ".join(str(self.values[p]) for p in self.base.points)
        return f"[{vals}]"


class Randomization:
    """Base space plus a structure attached to each sample point."""

    def __init__(self, base: FinProbSpace, family: Mapping[Point, FinStructure]):
        self.base = base
        self.family = {w: family[w] for w in base.points}
        if len(self.family) != len(base.points):
            raise ValidationError("family not total on the base")
        sigs = {m.signature for m in self.family.values()}
        if len(sigs) != 1:
            raise ValidationError("family structures must share one signature")
        self.signature = next(iter(sigs))

    @classmethod
    def constant(cls, structure: FinStructure, base: FinProbSpace) -> "Randomization":
        return cls(base, {w: structure for w in base.points})

    @property
    def is_constant(self) -> bool:
        return len({id(m) for m in self.family.values()}) == 1 or len(
            set(self.family.values())
        ) == 1

    @property
    def structure(self) -> FinStructure:
        if not self.is_constant:
            raise ValidationError("family is not constant")
        return self.family[self.base.points[0]]

    def carrier_size(self) -> int:
        """Number of random elements (the full product of the universes)."""
        out = 1
        for w in self.base.points:
            out *= self.family[w].size
        return out

    def all_elements(self, budget: int | None = None) -> Iterable[RandomElement]:
        """Enumerate the whole random-element sort, deterministically."""
        if budget is not None and self.carrier_size() > budget:
            raise BudgetError(
                "random-element enumeration over budget", self.carrier_size()
            )
        ranges = [range(self.family[w].size) for w in self.base.points]
        for combo in itertools.product(*ranges):
            yield RandomElement(self.base, dict(zip(self.base.points, combo)))

    def element(self, values: Sequence[int]) -> RandomElement:
        return RandomElement(self.base, dict(zip(self.base.points, values)))

    def check_event(self, e: Event) -> Event:
        e = frozenset(e)
        bad = e - set(self.base.points)
        if bad:
            raise ValidationError(f"event contains foreign points {sorted(map(repr, bad))}")
        return e

    def full_event(self) -> Event:
        return frozenset(self.base.points)

    def complement(self, e: Event) -> Event:
        return self.full_event() - self.check_event(e)

    def all_events(self, budget: int = 1 << 20) -> Iterable[Event]:
        n = len(self.base.points)
        if 2**n > budget:
            raise BudgetError("event enumeration over budget", 2**n)
        pts = self.base.points
        for mask in range(2**n):
            yield frozenset(p for i, p in enumerate(pts) if mask >> i & 1)


def _check_binding(
    rand: Randomization, phi: Formula, binding
) -> dict[str, RandomElement]:
    fv = sorted(free_vars(phi))
    if isinstance(binding, Mapping):
        bound = dict(binding)
    else:
        elems = list(binding)
        if len(elems) != len(fv):
            raise ValidationError(
                f"formula has free variables {fv}, got {len(elems)} elements"
            )
        bound = dict(zip(fv, elems))
    for v in fv:
        if v not in bound:
            raise ValidationError(f"free variable {v!r} not bound")
        if bound[v].base != rand.base:
            raise ValidationError(f"element bound to {v!r} lives on a different base")
    return bound


def event_of(rand: Randomization, phi: Formula, binding) -> Event:
    """The set of sample points where the bound tuple satisfies phi.

    `binding` is either a dict from variable names to random elements, or
    a tuple matched against the sorted free variables of phi.
    """
    bound = _check_binding(rand, phi, binding)
    out = set()
    for w in rand.base.points:
        val = {v: f(w) for v, f in bound.items()}
        if eval_formula(rand.family[w], phi, val):
            out.add(w)
    return frozenset(out)


def mu(rand: Randomization, e: Event) -> Fraction:
    return rand.base.mass(rand.check_event(e))


def d_b(rand: Randomization, e1: Event, e2: Event) -> Fraction:
    e1, e2 = rand.check_event(e1), rand.check_event(e2)
    return rand.base.mass(e1 ^ e2)


def d_k(rand: Randomization, f: RandomElement, g: RandomElement) -> Fraction:
    if f.base != rand.base or g.base != rand.base:
        raise ValidationError("elements live on a different base")
    agree = frozenset(w for w in rand.base.points if f(w) == g(w))
    return 1 - rand.base.mass(agree)


def d_k_tuple(
    rand: Randomization, fs: Sequence[RandomElement], gs: Sequence[RandomElement]
) -> Fraction:
    """Measure of the event that the two tuples differ in some coordinate."""
    if len(fs) != len(gs):
        raise ValidationError("tuples of different lengths")
    differ = frozenset(
        w
        for w in rand.base.points
        if any(f(w) != g(w) for f, g in zip(fs, gs))
    )
    return rand.base.mass(differ)


def fullness_witness(
    rand: Randomization, phi: Formula, var: str, binding
) -> RandomElement:
    """An exact witness f with [[phi(f, g..)]] equal to [[exists var phi]].

    Built pointwise: at each sample point pick the least witness when one
    exists, otherwise the least element.
    """
    rest = sorted(free_vars(phi) - {var})
    if isinstance(binding, Mapping):
        missing = [v for v in rest if v not in binding]
        if missing:
            raise ValidationError(f"free variables {missing} not bound")
        bound = {v: binding[v] for v in rest}
    else:
        elems = list(binding)
        if len(elems) != len(rest):
            raise ValidationError(
                f"formula has free variables {rest} besides {var!r}, "
                f"got {len(elems)} elements"
            )
        bound = dict(zip(rest, elems))
    for v, el in bound.items():
        if el.base != rand.base:
            raise ValidationError(f"element bound to {v!r} lives on a different base")
    values = {}
    for w in rand.base.points:
        m = rand.family[w]
        val = {v: f(w) for v, f in bound.items() if v != var}
        pick = 0
        for a in m.elements:
            if eval_formula(m, phi, {**val, var: a}):
                pick = a
                break
        values[w] = pick
    return RandomElement(rand.base, values)


def event_witness(rand: Randomization, e: Event) -> tuple[RandomElement, RandomElement]:
    """Elements f, g with [[f = g]] exactly the given event."""
    e = rand.check_event(e)
    f_vals, g_vals = {}, {}
    for w in rand.base.points:
        if w in e:
            f_vals[w] = g_vals[w] = 0
        else:
            f_vals[w] = 0
            g_vals[w] = 1
    return RandomElement(rand.base, f_vals), RandomElement(rand.base, g_vals)


def convex_combination(
    parts: Sequence[tuple[Fraction, Randomization]]
) -> Randomization:
    """Mix randomizations with positive weights summing to one.

    The base is the disjoint union with scaled weights, so the measure of
    any formula event is the weighted sum of the per-part measures.
    """
    if not parts:
        raise ValidationError("empty combination")
    weights = [frac(w) for w, _ in parts]
    if any(w <= 0 for w in weights):
        raise ValidationError("part weights must be positive")
    if sum(weights) != 1:
        raise ValidationError(f"part weights sum to {sum(weights)}, not 1")
    sigs = {r.signature for _, r in parts}
    if len(sigs) != 1:
        raise ValidationError("parts must share one signature")
    base_weights = []
    family = {}
    for i, (w0, rand) in enumerate(parts):
        for p in rand.base.points:
            label = (i, p)
            base_weights.append((label, frac(w0) * rand.base.weight[p]))
            family[label] = rand.family[p]
    base = FinProbSpace(base_weights)
    return Randomization(base, family)


def inject_element(
    combined: Randomization, part_index: int, f: RandomElement, fill: int = 0
) -> RandomElement:
    """Lift a part's random element into a convex combination's base.

    Points of other parts get the `fill` element.
    """
    values = {}
    for label in combined.base.points:
        i, p = label
        values[label] = f(p) if i == part_index else fill
    return RandomElement(combined.base, values)


# --- Event algebras and simple approximation -----------------------------------

class EventAlgebra:
    """The subalgebra of events generated by a finite family, as a partition."""

    def __init__(self, rand: Randomization, generators: Iterable[Event]):
        self.rand = rand
        gens = [rand.check_event(g) for g in generators]
        cells: dict[tuple[bool, ...], set] = {}
        for w in rand.base.points:
            sig = tuple(w in g for g in gens)
            cells.setdefault(sig, set()).add(w)
        order = {w: i for i, w in enumerate(rand.base.points)}
        self.atoms: tuple[Event, ...] = tuple(
            sorted((frozenset(c) for c in cells.values()), key=lambda c: min(order[w] for w in c))
        )

    def members(self) -> Iterable[Event]:
        for k in range(len(self.atoms) + 1):
            for combo in itertools.combinations(self.atoms, k):
                yield frozenset().union(*combo) if combo else frozenset()

    def contains(self, e: Event) -> bool:
        e = self.rand.check_event(e)
        return all(atom <= e or not (atom & e) for atom in self.atoms)

    def best_approximation(self, target: Event) -> Event:
        """The algebra member minimising the measure of the symmetric
        difference to `target`: keep an atom exactly when more than half
        of its mass lies inside the target."""
        target = self.rand.check_event(target)
        out: set = set()
        for atom in self.atoms:
            inside = self.rand.base.mass(atom & target)
            if 2 * inside > self.rand.base.mass(atom):
                out |= atom
        return frozenset(out)


class SimpleApproximationTrace:
    """Step-by-step record of the simple-approximation construction."""

    def __init__(self):
        self.n = 0
        self.eps = Fraction(0)
        self.head_mass = Fraction(0)
        self.levels: list[dict] = []

    def __repr__(self):
        return f"SimpleApproximationTrace(n={self.n}, levels={len(self.levels)})"


def approximate_by_simple(
    rand: Randomization,
    f: RandomElement,
    algebra: EventAlgebra,
    eps: Fraction,
    with_trace: bool = False,
):
    """An algebra-measurable g with d_K(f, g) < eps, by level-set rounding.

    Ranks the values of f by descending level-set mass, keeps the top n
    with total mass above 1 - eps/2, approximates each level set within
    eps/(4 n^2) in the algebra (an error reports the worst level set),
    disjointifies, and reads g off the pieces.  The partial bounds are
    recorded on the trace when requested.
    """
    eps = frac(eps)
    if eps <= 0:
        raise ValidationError("eps must be positive")
    levels: dict[int, set] = {}
    for w in rand.base.points:
        levels.setdefault(f(w), set()).add(w)
    ranked = sorted(
        levels.items(), key=lambda kv: (-rand.base.mass(kv[1]), kv[0])
    )
    total = Fraction(0)
    n = 0
    for _, level in ranked:
        if total > 1 - eps / 2:
            break
        total += rand.base.mass(level)
        n += 1
    trace = SimpleApproximationTrace()
    trace.eps = eps
    trace.n = n
    trace.head_mass = total

    approximants: list[tuple[int, Event, Event]] = []
    tolerance = eps / (4 * n * n) if n else None
    worst: tuple[Fraction, int] | None = None
    for a, level in ranked[:n]:
        level = frozenset(level)
        approx = algebra.best_approximation(level)
        err = rand.base.mass(level ^ approx)
        if tolerance is not None and not err < tolerance and (
            worst is None or err > worst[0]
        ):
            worst = (err, a)
        approximants.append((a, level, approx))

    taken: set = set()
    g_values = {w: approximants[0][0] if approximants else 0 for w in rand.base.points}
    for a, level, approx in approximants:
        piece = frozenset(approx - taken)
        taken |= approx
        for w in piece:
            g_values[w] = a
        if with_trace:
            trace.levels.append(
                {
                    "value": a,
                    "level_mass": rand.base.mass(level),
                    "approx_error": rand.base.mass(level ^ approx),
                    "piece_error": rand.base.mass(level ^ piece),
                    "within_tolerance": tolerance is not None
                    and rand.base.mass(level ^ approx) < tolerance,
                }
            )
    g = RandomElement(rand.base, g_values)
    achieved = d_k(rand, f, g)
    if not achieved < eps:
        # the rounding recipe only guarantees the bound when the algebra is
        # dense enough in every retained level set; report the worst one
        assert worst is not None
        raise ValidationError(
            f"algebra is not dense enough: level set of {worst[1]} has best "
            f"distance {worst[0]}, needs < {tolerance}; achieved d_K = {achieved}"
        )
    if with_trace:
        return g, trace
    return g
