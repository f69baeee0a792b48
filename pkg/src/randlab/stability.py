"""Stable-formula machinery over finite structures.

For a formula phi(x, y, w..) and a finite structure, the global phi-types
are exactly the traces {b : phi(a, b)} of elements, every orbit is
finite, and the algebraic closure of any parameter set is the whole
structure.  Consequently the definability-over-acl condition on
nonforking extensions is vacuous, local ranks collapse to 0, and the
probability that a random nonforking extension satisfies an instance is
a ratio of trace counts, computable exactly.

The randomized counterpart evaluates that probability in expectation
over a fiber product of type measures, yielding the definability
predicate of a randomized type and the canonical (stationary) extension
construction, certified independently by linear feasibility.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import BudgetError, ValidationError
from .extension import (
    Certificate,
    LinFeasProblem,
    extend_measure_eq,
)
from .formulas import Elem, Formula, TypeIs, Var, conj, disj, free_vars, substitute
from .measure import (
    FinProbSpace,
    MeasurableMap,
    FiberSpace,
    RationalFn,
    fiber_product,
    image_measure,
    pair,
)
from .randomization import Randomization, RandomElement
from .rtypes import RMeasure, rtype_of
from .semantics import TypeId, TypeSpace, eval_formula, type_space
from .structures import FinStructure

NEG_INF = float("-inf")


@dataclass(frozen=True)
class PhiContext:
    """A formula with designated variable groups x, y and parameters w.

    `w_values` instantiates the parameter variables for the operations
    that work inside one structure (ladders, trace spaces, ranks, rho);
    the measure-level operations instantiate them per fiber point from
    the shared parameter coordinates instead.
    """

    structure: FinStructure
    phi: Formula
    x_vars: tuple[str, ...]
    y_vars: tuple[str, ...]
    w_vars: tuple[str, ...] = ()
    w_values: tuple[int, ...] | None = None

    def __post_init__(self):
        groups = [self.x_vars, self.y_vars, self.w_vars]
        flat = [v for g in groups for v in g]
        if len(set(flat)) != len(flat):
            raise ValidationError("variable groups must be disjoint")
        fv = free_vars(self.phi)
        if not fv <= set(flat):
            raise ValidationError(
                f"free variables {sorted(fv - set(flat))} not covered by the groups"
            )
        if self.w_values is not None and len(self.w_values) != len(self.w_vars):
            raise ValidationError("w_values must match w_vars")

    def instance_holds(
        self, a: tuple[int, ...], b: tuple[int, ...], w: tuple[int, ...]
    ) -> bool:
        val = dict(zip(self.x_vars, a))
        val.update(zip(self.y_vars, b))
        val.update(zip(self.w_vars, w))
        return eval_formula(self.structure, self.phi, val)

    def _w_or_raise(self) -> tuple[int, ...]:
        if self.w_vars and self.w_values is None:
            raise ValidationError("operation needs instantiated parameter values")
        return self.w_values or ()


# --- Ladders and trace spaces ----------------------------------------------------

def ladder_length(ctx: PhiContext, bound: int) -> int:
    """Largest n <= bound with tuples a_i, b_j such that phi(a_i, b_j)
    holds exactly when i < j.  Always finite over a finite structure."""
    if bound < 1:
        raise ValidationError("bound must be at least 1")
    m = ctx.structure
    w = ctx._w_or_raise()
    xs = list(itertools.product(m.elements, repeat=len(ctx.x_vars)))
    ys = list(itertools.product(m.elements, repeat=len(ctx.y_vars)))
    best = 0

    def extend(a_list: list, b_list: list) -> None:
        nonlocal best
        k = len(a_list)
        best = max(best, k)
        if k >= bound:
            return
        for a in xs:
            if any(ctx.instance_holds(a, b, w) for b in b_list):
                continue
            for b in ys:
                if ctx.instance_holds(a, b, w):
                    continue
                if all(ctx.instance_holds(ai, b, w) for ai in a_list):
                    extend(a_list + [a], b_list + [b])
                    if best >= bound:
                        return

    extend([], [])
    return best


@dataclass(frozen=True)
class PhiType:
    """A realized global phi-type, identified with its trace."""

    trace: frozenset[tuple[int, ...]]
    witness: tuple[int, ...]


def _trace(ctx: PhiContext, a: tuple[int, ...], w: tuple[int, ...]) -> frozenset:
    m = ctx.structure
    return frozenset(
        b
        for b in itertools.product(m.elements, repeat=len(ctx.y_vars))
        if ctx.instance_holds(a, b, w)
    )


def phi_type_space(ctx: PhiContext) -> list[PhiType]:
    """All distinct traces, each with its least witness, in a stable order."""
    m = ctx.structure
    w = ctx._w_or_raise()
    seen: dict[frozenset, tuple[int, ...]] = {}
    for a in itertools.product(m.elements, repeat=len(ctx.x_vars)):
        t = _trace(ctx, a, w)
        if t not in seen:
            seen[t] = a
    ordered = sorted(seen.items(), key=lambda kv: kv[1])
    return [PhiType(t, a) for t, a in ordered]


def cb_rank_mult(ctx: PhiContext, pi: Formula) -> tuple[float | int, int]:
    """Rank and multiplicity of the trace classes consistent with pi.

    The trace space of a finite structure is finite and discrete, so a
    consistent pi has rank 0 and multiplicity the number of distinct
    traces among its solutions; an inconsistent pi reports -inf rank.
    """
    m = ctx.structure
    w = ctx._w_or_raise()
    fv = free_vars(pi)
    if not fv <= set(ctx.x_vars):
        raise ValidationError(
            f"partial type may only use the x variables, got {sorted(fv)}"
        )
    traces = set()
    for a in itertools.product(m.elements, repeat=len(ctx.x_vars)):
        if eval_formula(m, pi, dict(zip(ctx.x_vars, a))):
            traces.add(_trace(ctx, a, w))
    if not traces:
        return (NEG_INF, 0)
    return (0, len(traces))


# --- rho ---------------------------------------------------------------------------

def rho(
    ctx: PhiContext,
    p_space: TypeSpace,
    p: TypeId,
    b,
) -> Fraction:
    """Probability that a random nonforking extension of p satisfies the
    phi-instance at b.

    Computed two independent ways and asserted equal: the fraction of
    traces of p's orbit containing b, and the ratio of multiplicities of
    (isolating formula of p) & phi(x, b) over the isolating formula alone.
    `b` is an element, a tuple, or a TypeId over the same parameters.
    """
    m = ctx.structure
    if p_space.structure != m:
        raise ValidationError("type space belongs to a different structure")
    if p_space.arity != len(ctx.x_vars):
        raise ValidationError("p must be a type in the x variables")
    w = ctx._w_or_raise()
    if w and not set(w) <= set(p_space.params):
        raise ValidationError(
            "instantiated parameters must come from the type's parameter set"
        )
    if isinstance(b, TypeId):
        b_tuple = b.rep
    elif isinstance(b, int):
        b_tuple = (b,)
    else:
        b_tuple = tuple(b)
    if len(b_tuple) != len(ctx.y_vars):
        raise ValidationError("b must match the y variable group")

    # route 1: traces over the orbit of p
    orbit = p_space.orbit(p)
    traces = {_trace(ctx, a, w) for a in orbit}
    hits = sum(1 for t in traces if b_tuple in t)
    value = Fraction(hits, len(traces))

    # route 2: multiplicity ratio through the isolating formula
    from .semantics import isolating_formula

    iso = isolating_formula(p_space, p)
    iso = substitute(iso, {f"x{i}": Var(v) for i, v in enumerate(ctx.x_vars)})
    inst = substitute(
        ctx.phi,
        {
            **{v: Elem(e) for v, e in zip(ctx.y_vars, b_tuple)},
            **{v: Elem(e) for v, e in zip(ctx.w_vars, w)},
        },
    )
    _, m_base = cb_rank_mult(ctx, iso)
    _, m_inst = cb_rank_mult(ctx, conj([iso, inst]))
    ratio = Fraction(m_inst, m_base)
    if ratio != value:
        raise AssertionError(
            f"trace-fraction {value} and multiplicity ratio {ratio} disagree"
        )
    return value


# --- Type-space plumbing for the measure level --------------------------------------

def restriction_map(space: TypeSpace, indices: Sequence[int], target: TypeSpace) -> MeasurableMap:
    """Coordinate restriction between parameter-free joint type spaces."""
    if space.params or target.params:
        raise ValidationError("restriction maps act on parameter-free spaces")
    if len(indices) != target.arity:
        raise ValidationError("index list must match the target arity")
    mapping = {
        q: target.type_of(tuple(q.rep[i] for i in indices)) for q in space.types
    }
    return MeasurableMap(space.types, target.types, mapping)


def _measure_space(nu: RMeasure) -> FinProbSpace:
    support = [(q, nu.weights[q]) for q in nu.space.types if nu.weights[q] > 0]
    return FinProbSpace(support)


def _realize_with_w_part(
    space: TypeSpace, q: TypeId, head: int, w_rep: tuple[int, ...]
) -> tuple[int, ...]:
    """A member of q's orbit whose trailing coordinates equal w_rep."""
    for t in space.orbit(q):
        if t[head:] == w_rep:
            return t[:head]
    raise AssertionError("matching orbit member must exist when base types agree")


def _fiber_data(ctx: PhiContext, p: RMeasure, q: RMeasure, y_width: int | None = None):
    m = ctx.structure
    nx = len(ctx.x_vars)
    nw = p.space.arity - nx
    ny = q.space.arity - nw if y_width is None else y_width
    if nw < 0 or ny < 0 or q.space.arity - ny != nw:
        raise ValidationError("measures do not share a parameter block")
    if p.space.params or q.space.params:
        raise ValidationError("measure-level operations use joint spaces over ()")
    w_space = type_space(m, nw, ())
    pi_x = restriction_map(p.space, range(nx, nx + nw), w_space)
    pi_y = restriction_map(q.space, range(ny, ny + nw), w_space)
    return w_space, pi_x, pi_y, nx, ny, nw


def _rho_at_pair(
    ctx: PhiContext, p0: TypeId, q0: TypeId, p_space: TypeSpace, q_space: TypeSpace,
    nx: int, ny: int, nw: int,
) -> Fraction:
    m = ctx.structure
    w_rep = type_space(m, nw, ()).type_of(p0.rep[nx:]).rep
    a = _realize_with_w_part(p_space, p0, nx, w_rep)
    b = _realize_with_w_part(q_space, q0, ny, w_rep)
    positions = range(len(ctx.w_vars))  # w variables name the leading W coords
    w_vals = tuple(w_rep[i] for i in positions)
    inner = PhiContext(
        m, ctx.phi, ctx.x_vars, ctx.y_vars, ctx.w_vars, w_vals
    )
    space_a = type_space(m, nx, w_rep)
    return rho(inner, space_a, space_a.type_of(a), b)


def rho_fn(ctx: PhiContext, p: RMeasure, q: RMeasure) -> tuple[RationalFn, FinProbSpace]:
    """rho materialised on the fiber product of the two measures."""
    w_space, pi_x, pi_y, nx, ny, nw = _fiber_data(ctx, p, q, len(ctx.y_vars))
    mu_p = _measure_space(p)
    mu_q = _measure_space(q)
    fib = FiberSpace(
        MeasurableMap(mu_p.points, w_space.types, {t: pi_x(t) for t in mu_p.points}),
        MeasurableMap(mu_q.points, w_space.types, {t: pi_y(t) for t in mu_q.points}),
    )
    joint = fiber_product(mu_p, mu_q, fib)
    values = {
        pt: _rho_at_pair(ctx, pt[0], pt[1], p.space, q.space, nx, ny, nw)
        for pt in joint.points
    }
    return RationalFn(joint.points, values), joint


def rho_hat(ctx: PhiContext, p: RMeasure, q: RMeasure) -> Fraction:
    """Expected rho under the fiber product of the two type measures."""
    fn, joint = rho_fn(ctx, p, q)
    return pair(fn, joint)


# --- The canonical nonforking extension ----------------------------------------------

def nonforking_extension(
    ctx: PhiContext, p: RMeasure, q: RMeasure, target: TypeSpace | None = None
) -> RMeasure:
    """The joint measure extending p by the new parameters described by q.

    Over each fiber pair, the pair's mass is spread uniformly over the
    completions obtained from the realizations of the x-type; transitivity
    of the parameter-fixing group makes this the same as averaging over
    the trace classes, so every phi-instance value equals rho_hat.
    """
    m = ctx.structure
    w_space, pi_x, pi_y, nx, totaly, nw = _fiber_data(ctx, p, q)
    if target is None:
        target = type_space(m, nx + totaly + nw, ())
    if target.arity != nx + totaly + nw or target.params:
        raise ValidationError("target must be the joint space over ()")
    img_p = {w: Fraction(0) for w in w_space.types}
    for q0 in p.space.types:
        img_p[pi_x(q0)] += p.weights[q0]
    acc: dict[TypeId, Fraction] = {}
    for p0 in p.space.types:
        if p.weights[p0] == 0:
            continue
        r = pi_x(p0)
        for q0 in q.space.types:
            if q.weights[q0] == 0 or pi_y(q0) != r:
                continue
            cell = p.weights[p0] * q.weights[q0] / img_p[r]
            w_rep = r.rep
            b = _realize_with_w_part(q.space, q0, totaly, w_rep)
            realizations = [
                a
                for a in itertools.product(m.elements, repeat=nx)
                if p.space.type_of(a + w_rep) == p0
            ]
            share = cell / len(realizations)
            for a in realizations:
                r0 = target.type_of(a + b + w_rep)
                acc[r0] = acc.get(r0, Fraction(0)) + share
    return RMeasure(target, acc)


def stationarity_problem(
    ctx: PhiContext, p: RMeasure, q: RMeasure, target: TypeSpace | None = None
) -> LinFeasProblem:
    """The linear system a joint extension must satisfy: both marginals,
    plus every phi-instance pinned to its rho_hat value."""
    m = ctx.structure
    w_space, pi_x, pi_y, nx, total_y, nw = _fiber_data(ctx, p, q)
    if total_y % len(ctx.y_vars) != 0:
        raise ValidationError("q's arity is not a whole number of y blocks")
    copies = total_y // len(ctx.y_vars)
    if target is None:
        target = type_space(m, nx + total_y + nw, ())
    constraints: list[tuple[RationalFn, Fraction, str]] = []
    restrict_x = restriction_map(
        target, list(range(nx)) + list(range(nx + total_y, target.arity)), p.space
    )
    for s in p.space.types:
        ind = RationalFn(
            target.types,
            {t: Fraction(1 if restrict_x(t) == s else 0) for t in target.types},
        )
        constraints.append((ind, p.weights[s], "="))
    restrict_y = restriction_map(
        target, list(range(nx, target.arity)), q.space
    )
    for s in q.space.types:
        ind = RationalFn(
            target.types,
            {t: Fraction(1 if restrict_y(t) == s else 0) for t in target.types},
        )
        constraints.append((ind, q.weights[s], "="))
    ny = len(ctx.y_vars)
    for i in range(copies):
        q_i = image_measure(
            _measure_space(q),
            restriction_map(
                q.space,
                list(range(i * ny, (i + 1) * ny)) + list(range(total_y, q.space.arity)),
                type_space(m, ny + nw, ()),
            ),
        )
        nu_i = RMeasure(
            type_space(m, ny + nw, ()),
            {t: q_i.weight.get(t, Fraction(0)) for t in type_space(m, ny + nw, ()).types},
        )
        value = rho_hat(ctx, p, nu_i)

        def holds(t: TypeId, i=i) -> bool:
            rep = t.rep
            a = rep[:nx]
            b = rep[nx + i * ny : nx + (i + 1) * ny]
            w_rep = rep[nx + total_y :]
            w_vals = tuple(w_rep[j] for j in range(len(ctx.w_vars)))
            return ctx.instance_holds(a, b, w_vals)

        ind = RationalFn(
            target.types,
            {t: Fraction(1 if holds(t) else 0) for t in target.types},
        )
        constraints.append((ind, value, "="))
    return LinFeasProblem(target.types, constraints)


def certify_nonforking(
    ctx: PhiContext, p: RMeasure, q: RMeasure
) -> tuple[LinFeasProblem, Certificate]:
    """Feed the stationarity system to the equality extension solver."""
    prob = stationarity_problem(ctx, p, q)
    return prob, extend_measure_eq(prob)


# --- Independence ------------------------------------------------------------------

@dataclass
class IndependenceVerdict:
    independent: bool
    witness: Formula | None = None
    lhs: Fraction | None = None
    rhs: Fraction | None = None
    checked: int = 0


def invariant_subset_formulas(
    m: FinStructure,
    x_vars: tuple[str, ...],
    y_vars: tuple[str, ...],
    w_vars: tuple[str, ...],
    max_formulas: int = 4096,
) -> list[tuple[Formula, frozenset[int]]]:
    """Every semantically distinct formula in the given variable groups.

    Over a finite structure the definable subsets are exactly the unions
    of orbits, so enumerating orbit unions realizes the full fragment of
    any quantifier depth.  Formulas are returned as orbit-membership
    disjunctions, printable through isolating formulas.
    """
    k = len(x_vars) + len(y_vars) + len(w_vars)
    ambient = type_space(m, k, ())
    orbits = list(ambient.types)
    if 2 ** len(orbits) > max_formulas:
        raise BudgetError("invariant-subset fragment too large", 2 ** len(orbits))
    arg_terms = tuple(Var(v) for v in tuple(x_vars) + tuple(y_vars) + tuple(w_vars))
    from .formulas import Eq, Not

    never = Not(Eq(arg_terms[0], arg_terms[0]))
    out: list[tuple[Formula, frozenset[int]]] = []
    indices = list(range(len(orbits)))
    for size in range(len(orbits) + 1):
        for combo in itertools.combinations(indices, size):
            if combo:
                phi = disj([TypeIs(ambient, orbits[i], arg_terms) for i in combo])
            else:
                phi = never
            out.append((phi, frozenset(combo)))
    return out


def check_independence(
    rand: Randomization,
    c: Sequence[RandomElement],
    b: Sequence[RandomElement],
    params: Sequence[RandomElement],
    max_formulas: int = 4096,
) -> IndependenceVerdict:
    """Decide whether c and b are independent over the parameters.

    Independence here means: for every formula phi(x, y, w) in the
    exhaustive fragment, the measured probability of phi(c, b, params)
    equals the expected nonforking value rho_hat computed from the two
    type measures.  The first violating formula is reported.
    """
    if not rand.is_constant:
        raise ValidationError("independence checking needs a constant family")
    m = rand.structure

    def names(letter: str, count: int) -> tuple[str, ...]:
        return (letter,) if count == 1 else tuple(
            f"{letter}{i}" for i in range(count)
        )

    c, b, params = tuple(c), tuple(b), tuple(params)
    x_vars = names("x", len(c))
    y_vars = names("y", len(b))
    w_vars = names("w", len(params))
    k = len(c) + len(b) + len(params)
    ambient = type_space(m, k, ())
    p_meas = rtype_of(rand, c, params)
    q_meas = rtype_of(rand, b, params)
    checked = 0
    for phi, orbit_set in invariant_subset_formulas(
        m, x_vars, y_vars, w_vars, max_formulas
    ):
        lhs = Fraction(0)
        for w in rand.base.points:
            tup = tuple(f(w) for f in c) + tuple(g(w) for g in b) + tuple(
                h(w) for h in params
            )
            if ambient.index_of(tup) in orbit_set:
                lhs += rand.base.weight[w]
        ctx = PhiContext(m, phi, x_vars, y_vars, w_vars)
        rhs = rho_hat(ctx, p_meas, q_meas)
        checked += 1
        if lhs != rhs:
            return IndependenceVerdict(False, phi, lhs, rhs, checked)
    return IndependenceVerdict(True, None, None, None, checked)
