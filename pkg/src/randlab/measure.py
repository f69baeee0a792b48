"""Exact finite measure theory: spaces, image measures, conditional
expectation, the pairing <f, mu>, and fiber products.

Everything is a Fraction; the identities checked by the test suite are
equalities, not approximations.  Sample spaces carry strictly positive
weights; points of weight zero only ever appear in extension-problem
witnesses (see `extension`), which are simplex points, not sample spaces.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping

from .errors import ValidationError

Point = Hashable


def frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class FinProbSpace:
    """Finite sample space with positive rational weights summing to one."""

    def __init__(self, weights: Mapping[Point, Fraction] | Iterable[tuple[Point, Fraction]]):
        items = list(weights.items()) if isinstance(weights, Mapping) else list(weights)
        self.points: tuple[Point, ...] = tuple(p for p, _ in items)
        if len(set(self.points)) != len(self.points):
            raise ValidationError("duplicate sample points")
        if not self.points:
            raise ValidationError("empty sample space")
        self.weight: dict[Point, Fraction] = {p: frac(w) for p, w in items}
        for p, w in self.weight.items():
            if w <= 0:
                raise ValidationError(f"weight of {p!r} must be positive, got {w}")
        if sum(self.weight.values()) != 1:
            raise ValidationError(
                f"weights sum to {sum(self.weight.values())}, not 1"
            )

    @classmethod
    def uniform(cls, n: int) -> "FinProbSpace":
        return cls([(i, Fraction(1, n)) for i in range(n)])

    @classmethod
    def dyadic(cls, depth: int) -> "FinProbSpace":
        return cls.uniform(2**depth)

    def mass(self, event: Iterable[Point]) -> Fraction:
        return sum((self.weight[p] for p in event), Fraction(0))

    def index(self, p: Point) -> int:
        return self.points.index(p)

    def _key(self):
        return tuple((p, self.weight[p]) for p in self.points)

    def __eq__(self, other):
        return isinstance(other, FinProbSpace) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def same_distribution(self, other: "FinProbSpace") -> bool:
        """Equality as measures: same weight function, point order ignored."""
        return self.weight == other.weight

    def __repr__(self):
        inner = ", ".join(f"{p!r}: {w}" for p, w in self.weight.items())
        return f"FinProbSpace({{{inner}}})"


class MeasurableMap:
    """Total point map between finite point sets."""

    def __init__(
        self,
        domain: tuple[Point, ...],
        codomain: tuple[Point, ...],
        mapping: Mapping[Point, Point],
    ):
        self.domain = tuple(domain)
        self.codomain = tuple(codomain)
        self.mapping = dict(mapping)
        cod = set(self.codomain)
        for p in self.domain:
            if p not in self.mapping:
                raise ValidationError(f"map not total: missing {p!r}")
            if self.mapping[p] not in cod:
                raise ValidationError(f"map image {self.mapping[p]!r} outside codomain")

    def __call__(self, p: Point) -> Point:
        return self.mapping[p]

    @classmethod
    def from_function(
        cls, domain: tuple[Point, ...], codomain: tuple[Point, ...], fn: Callable[[Point], Point]
    ) -> "MeasurableMap":
        return cls(domain, codomain, {p: fn(p) for p in domain})


class RationalFn:
    """Total rational-valued function on a finite ground set."""

    def __init__(self, domain: tuple[Point, ...], values: Mapping[Point, Fraction]):
        self.domain = tuple(domain)
        self.values = {p: frac(values[p]) for p in self.domain}
        if len(self.values) != len(self.domain):
            raise ValidationError("function not total on its domain")

    def __call__(self, p: Point) -> Fraction:
        return self.values[p]

    @classmethod
    def indicator(cls, domain: tuple[Point, ...], subset: Iterable[Point]) -> "RationalFn":
        s = set(subset)
        return cls(domain, {p: Fraction(1 if p in s else 0) for p in domain})

    @classmethod
    def constant(cls, domain: tuple[Point, ...], c) -> "RationalFn":
        return cls(domain, {p: frac(c) for p in domain})

    def check_unit_range(self) -> "RationalFn":
        for p, v in self.values.items():
            if not 0 <= v <= 1:
                raise ValidationError(f"value {v} at {p!r} outside [0, 1]")
        return self

    def __eq__(self, other):
        return (
            isinstance(other, RationalFn)
            and set(self.domain) == set(other.domain)
            and self.values == other.values
        )

    def __hash__(self):
        return hash((self.domain, tuple(sorted((repr(p), v) for p, v in self.values.items()))))


class FiberSpace:
    """Set-theoretic fiber product of two point sets over a common base."""

    def __init__(self, pi_x: MeasurableMap, pi_y: MeasurableMap):
        if set(pi_x.codomain) != set(pi_y.codomain):
            raise ValidationError("fiber legs must share a codomain")
        self.pi_x = pi_x
        self.pi_y = pi_y
        self.points: tuple[tuple[Point, Point], ...] = tuple(
            (x, y)
            for x in pi_x.domain
            for y in pi_y.domain
            if pi_x(x) == pi_y(y)
        )

    def base_of(self, pt: tuple[Point, Point]) -> Point:
        return self.pi_x(pt[0])

    def proj_x(self) -> MeasurableMap:
        return MeasurableMap(self.points, self.pi_x.domain, {p: p[0] for p in self.points})

    def proj_y(self) -> MeasurableMap:
        return MeasurableMap(self.points, self.pi_y.domain, {p: p[1] for p in self.points})


# --- Operations ---------------------------------------------------------------

def image_measure(mu: FinProbSpace, pi: MeasurableMap) -> FinProbSpace:
    """Pushforward of mu along pi; zero-weight codomain points are dropped."""
    for p in mu.points:
        if p not in pi.mapping:
            raise ValidationError(f"map not defined on support point {p!r}")
    acc: dict[Point, Fraction] = {}
    for p in mu.points:
        q = pi(p)
        acc[q] = acc.get(q, Fraction(0)) + mu.weight[p]
    ordered = [(q, acc[q]) for q in pi.codomain if q in acc]
    return FinProbSpace(ordered)


def cond_exp(mu: FinProbSpace, f: RationalFn, pi: MeasurableMap) -> RationalFn:
    """Conditional expectation of f given pi, as a function on the image.

    Characterised by: integrating the result over any S downstairs equals
    integrating f over the preimage of S.  Points whose fiber has measure
    zero are excluded from the output domain (here: never hit points).
    """
    num: dict[Point, Fraction] = {}
    den: dict[Point, Fraction] = {}
    for p in mu.points:
        q = pi(p)
        num[q] = num.get(q, Fraction(0)) + f(p) * mu.weight[p]
        den[q] = den.get(q, Fraction(0)) + mu.weight[p]
    domain = tuple(q for q in pi.codomain if q in den)
    return RationalFn(domain, {q: num[q] / den[q] for q in domain})


def pair(phi: RationalFn, mu: FinProbSpace) -> Fraction:
    """The integral of phi against mu."""
    if set(phi.domain) != set(mu.points):
        raise ValidationError("pairing requires matching ground sets")
    return sum((phi(p) * mu.weight[p] for p in mu.points), Fraction(0))


def fiber_product(mu: FinProbSpace, nu: FinProbSpace, fib: FiberSpace) -> FinProbSpace:
    """The fiber product measure on pairs agreeing over the base.

    Requires the two image measures on the base to coincide exactly; the
    weight of (x, y) is mu(x) * nu(y) / base(pi(x)).  Its marginals are mu
    and nu, and the three equivalent rectangle formulas (integrated
    conditional product, and either one-sided integral) agree; the test
    suite checks all three on every rectangle.
    """
    img_x = image_measure(mu, fib.pi_x)
    img_y = image_measure(nu, fib.pi_y)
    if img_x.weight != img_y.weight:
        keys = set(img_x.weight) | set(img_y.weight)
        for z in keys:
            a = img_x.weight.get(z, Fraction(0))
            b = img_y.weight.get(z, Fraction(0))
            if a != b:
                raise ValidationError(
                    f"image measures differ at base point {z!r}: {a} vs {b}"
                )
    weights = []
    for x, y in fib.points:
        if x in mu.weight and y in nu.weight:
            z = fib.pi_x(x)
            weights.append(((x, y), mu.weight[x] * nu.weight[y] / img_x.weight[z]))
    return FinProbSpace(weights)
