"""Measure-extension problems as exact linear feasibility with certificates.

`extend_measure_ineq` decides whether a probability measure exists meeting
a family of one-sided integral bounds; `extend_measure_eq` handles exact
prescribed integrals by the +/- duplication trick.  Either a witness
measure (zero weights allowed: a simplex point, not a sample space) or an
integer-coefficient infeasibility certificate is returned; both re-verify
against the problem data by exact arithmetic.

The pivot engine is a dictionary-free phase-one simplex over Fractions
with Bland's rule, so runs are deterministic and never cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Sequence

from .errors import ValidationError
from .measure import Point, RationalFn, frac


@dataclass(frozen=True)
class Constraint:
    fn: RationalFn
    bound: Fraction
    relation: Literal["<=", "="]


class LinFeasProblem:
    """Ground set + constraints `<fn, mu> REL bound` on a probability measure."""

    def __init__(self, ground: Sequence[Point], constraints: Iterable[tuple[RationalFn, Fraction, str]]):
        self.ground: tuple[Point, ...] = tuple(ground)
        if len(set(self.ground)) != len(self.ground):
            raise ValidationError("duplicate ground-set points")
        self.constraints: list[Constraint] = []
        for fn, bound, rel in constraints:
            if rel not in ("<=", "="):
                raise ValidationError(f"bad relation {rel!r}")
            if set(fn.domain) != set(self.ground):
                raise ValidationError("constraint function domain mismatch")
            self.constraints.append(Constraint(fn, frac(bound), rel))  # type: ignore[arg-type]

    def relations(self) -> set[str]:
        return {c.relation for c in self.constraints}


@dataclass
class FeasibleCertificate:
    """A sub-simplex point satisfying every constraint exactly."""

    weights: dict[Point, Fraction]

    feasible = True

    def verify(self, prob: LinFeasProblem) -> bool:
        if any(w < 0 for w in self.weights.values()):
            return False
        if sum(self.weights.values(), Fraction(0)) != 1:
            return False
        for c in prob.constraints:
            val = sum(
                (c.fn(p) * self.weights.get(p, Fraction(0)) for p in prob.ground),
                Fraction(0),
            )
            if c.relation == "<=" and not val <= c.bound:
                return False
            if c.relation == "=" and val != c.bound:
                return False
        return True


@dataclass
class InfeasibleIneqCertificate:
    """Multiplicities m_i >= 0 and an integer n with
    sum m_i * fn_i >= n pointwise while sum m_i * bound_i < n."""

    multipliers: list[int]
    n: int

    feasible = False

    def verify(self, prob: LinFeasProblem) -> bool:
        if any(m < 0 for m in self.multipliers) or len(self.multipliers) != len(
            prob.constraints
        ):
            return False
        for p in prob.ground:
            total = sum(
                m * c.fn(p) for m, c in zip(self.multipliers, prob.constraints)
            )
            if not total >= self.n:
                return False
        bound_total = sum(
            m * c.bound for m, c in zip(self.multipliers, prob.constraints)
        )
        return bound_total < self.n


@dataclass
class InfeasibleEqCertificate:
    """Signed integers m_i (plus a coefficient on the constant-one
    function) with  sum m_i * fn_i + constant >= 0  pointwise while
    sum m_i * bound_i + constant < 0."""

    multipliers: list[int]
    constant: int = 0

    feasible = False

    def verify(self, prob: LinFeasProblem) -> bool:
        if len(self.multipliers) != len(prob.constraints):
            return False
        for p in prob.ground:
            total = self.constant + sum(
                m * c.fn(p) for m, c in zip(self.multipliers, prob.constraints)
            )
            if not total >= 0:
                return False
        bound_total = self.constant + sum(
            m * c.bound for m, c in zip(self.multipliers, prob.constraints)
        )
        return bound_total < 0


Certificate = FeasibleCertificate | InfeasibleIneqCertificate | InfeasibleEqCertificate


# --- Phase-one simplex ---------------------------------------------------------

def _phase_one(
    rows: list[list[Fraction]], rhs: list[Fraction]
) -> tuple[list[Fraction] | None, list[Fraction] | None]:
    """Solve `rows * x = rhs, x >= 0` for feasibility.

    Returns (solution, None) with a basic feasible solution, or
    (None, duals) where the duals y satisfy y.A <= 0 columnwise while
    y.b > 0 (a separating functional proving infeasibility).
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    flip = [Fraction(1)] * m
    tab = [row[:] for row in rows]
    b = rhs[:]
    for i in range(m):
        if b[i] < 0:
            flip[i] = Fraction(-1)
            tab[i] = [-v for v in tab[i]]
            b[i] = -b[i]
    # columns 0..n-1 original, n..n+m-1 artificial; minimise sum of artificials
    for i in range(m):
        tab[i] = tab[i] + [Fraction(1 if j == i else 0) for j in range(m)]
    width = n + m
    basis = [n + i for i in range(m)]
    # objective row holds d_j = z_j - c_j (c_j = 1 on artificial columns);
    # a column with d_j > 0 improves, and optimality means d_j <= 0.
    cost = [
        sum(tab[i][j] for i in range(m)) - (1 if j >= n else 0)
        for j in range(width)
    ]
    obj = sum(b, Fraction(0))

    while True:
        enter = -1
        for j in range(n):  # artificials never re-enter
            if j not in basis and cost[j] > 0:
                enter = j  # Bland: smallest index
                break
        if enter < 0:
            break
        leave = -1
        best: Fraction | None = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = b[i] / tab[i][enter]
                if best is None or ratio < best or (
                    ratio == best and basis[i] < basis[leave]
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            raise AssertionError("phase-one objective is bounded by construction")
        piv = tab[leave][enter]
        tab[leave] = [v / piv for v in tab[leave]]
        b[leave] /= piv
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                factor = tab[i][enter]
                tab[i] = [v - factor * w for v, w in zip(tab[i], tab[leave])]
                b[i] -= factor * b[leave]
        factor = cost[enter]
        cost = [v - factor * w for v, w in zip(cost, tab[leave])]
        obj -= factor * b[leave]
        basis[leave] = enter

    if obj == 0:
        x = [Fraction(0)] * n
        for i, j in enumerate(basis):
            if j < n:
                x[j] = b[i]
            elif b[i] != 0:
                raise AssertionError("zero objective with a nonzero artificial")
        return x, None
    # duals y_i = z at the i-th artificial column = d + 1; undo row flips.
    # obj > 0 already certifies y.b > 0, and d_j <= 0 on the original
    # columns gives y.A <= 0 there, which is all Farkas needs.
    duals = [(cost[n + i] + 1) * flip[i] for i in range(m)]
    return None, duals


def _solve_feasibility(prob: LinFeasProblem) -> Certificate:
    ground = prob.ground
    k = len(prob.constraints)
    nvar = len(ground) + k  # measure weights + slacks for <= rows
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    # total mass one
    rows.append([Fraction(1)] * len(ground) + [Fraction(0)] * k)
    rhs.append(Fraction(1))
    for i, c in enumerate(prob.constraints):
        row = [c.fn(p) for p in ground]
        row += [Fraction(1 if j == i else 0) for j in range(k)]
        rows.append(row)
        rhs.append(c.bound)
    x, duals = _phase_one(rows, rhs)
    if x is not None:
        weights = {p: x[i] for i, p in enumerate(ground)}
        cert = FeasibleCertificate(weights)
        if not cert.verify(prob):
            raise AssertionError("simplex produced a non-verifying witness")
        return cert
    assert duals is not None
    # duals: y_0 for the mass row, y_1..y_k for the bound rows.  Dual
    # feasibility gives y_0 + sum y_i fn_i(p) <= 0 and slack columns force
    # y_i <= 0, while y_0 + sum y_i bound_i > 0.  With u = -y_i >= 0:
    #   sum u_i fn_i >= y_0 pointwise  and  sum u_i bound_i < y_0.
    y0 = duals[0]
    u = [-d for d in duals[1:]]
    for i, ui in enumerate(u):
        if ui < 0:
            # numeric impossibility for exact arithmetic; guard anyway
            raise AssertionError(f"negative dual multiplier u[{i}] = {ui}")
    return _integerize_certificate(prob, u, y0)


def _integerize_certificate(
    prob: LinFeasProblem, u: list[Fraction], y0: Fraction
) -> InfeasibleIneqCertificate:
    """Clear denominators and pick an integer threshold n that still works."""
    den = math.lcm(*[f.denominator for f in u + [y0]]) if u else y0.denominator
    m = [int(ui * den) for ui in u]
    lhs_min = min(
        sum((mi * c.fn(p) for mi, c in zip(m, prob.constraints)), Fraction(0))
        for p in prob.ground
    )
    bound_total = sum(
        (mi * c.bound for mi, c in zip(m, prob.constraints)), Fraction(0)
    )
    gap = lhs_min - bound_total
    if gap <= 0:
        raise AssertionError("dual certificate does not separate")
    scale = 1
    while scale * gap < 1:
        scale *= 2
    m = [mi * scale for mi in m]
    lhs_min *= scale
    bound_total *= scale
    # the interval (bound_total, lhs_min] now has length >= 1, so the
    # floor of its right end is a valid integer threshold
    n = math.floor(lhs_min)
    assert n > bound_total
    cert = InfeasibleIneqCertificate(m, n)
    if not cert.verify(prob):
        raise AssertionError("integerised certificate failed to verify")
    return cert


# --- Public operations ----------------------------------------------------------

def extend_measure_ineq(prob: LinFeasProblem) -> Certificate:
    """Decide `exists mu: <fn_i, mu> <= bound_i for all i` with certificates."""
    if prob.relations() - {"<="}:
        raise ValidationError("extend_measure_ineq accepts only <= constraints")
    return _solve_feasibility(prob)


def extend_measure_eq(prob: LinFeasProblem) -> Certificate:
    """Decide `exists mu: <fn_i, mu> = bound_i for all i` with certificates.

    The constant-one constraint `<1, mu> = 1` is required; it is adjoined
    when missing and rejected when present with a different bound.  The
    decision reduces to the one-sided solver by duplicating each
    constraint with both signs.
    """
    if prob.relations() - {"="}:
        raise ValidationError("extend_measure_eq accepts only = constraints")
    constraints = list(prob.constraints)
    one = RationalFn.constant(prob.ground, 1)
    one_index = None
    for i, c in enumerate(constraints):
        if c.fn == one:
            if c.bound != 1:
                raise ValidationError(f"constant-one constraint bound {c.bound} != 1")
            one_index = i
    if one_index is None:
        constraints.append(Constraint(one, Fraction(1), "="))
        one_index = len(constraints) - 1
    ground = prob.ground
    doubled = []
    for c in constraints:
        doubled.append((c.fn, c.bound, "<="))
        neg = RationalFn(ground, {p: -c.fn(p) for p in ground})
        doubled.append((neg, -c.bound, "<="))
    ineq = LinFeasProblem(ground, doubled)
    res = extend_measure_ineq(ineq)
    if isinstance(res, FeasibleCertificate):
        full = LinFeasProblem(ground, [(c.fn, c.bound, c.relation) for c in constraints])
        if not res.verify(full):
            raise AssertionError("equality witness failed to verify")
        return res
    assert isinstance(res, InfeasibleIneqCertificate)
    signed = [
        res.multipliers[2 * i] - res.multipliers[2 * i + 1]
        for i in range(len(constraints))
    ]
    # fold the threshold n into the constant-one coefficient
    if one_index >= len(prob.constraints):  # the constant row was adjoined
        constant = signed.pop() - res.n
    else:
        signed[one_index] -= res.n
        constant = 0
    cert = InfeasibleEqCertificate(signed, constant)
    if not cert.verify(prob):
        raise AssertionError("equality certificate failed to verify")
    return cert


# --- Text interchange -----------------------------------------------------------

def parse_problem(text: str, ground: Sequence[Point] | None = None) -> LinFeasProblem:
    """One constraint per line: `<=|= <rational> : v1,v2,...,vk`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    rows = []
    width = None
    for ln in lines:
        head, _, tail = ln.partition(":")
        head = head.strip()
        if head.startswith("<="):
            rel, bound_text = "<=", head[2:]
        elif head.startswith("="):
            rel, bound_text = "=", head[1:]
        else:
            raise ValidationError(f"constraint line must start with <= or =: {ln!r}")
        bound = Fraction(bound_text.strip())
        values = [Fraction(v.strip()) for v in tail.split(",") if v.strip()]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ValidationError("constraint rows have differing widths")
        rows.append((rel, bound, values))
    if width is None:
        raise ValidationError("empty problem")
    pts: tuple[Point, ...] = tuple(ground) if ground is not None else tuple(range(width))
    if len(pts) != width:
        raise ValidationError("ground set size does not match row width")
    constraints = [
        (RationalFn(pts, dict(zip(pts, values))), bound, rel)
        for rel, bound, values in rows
    ]
    return LinFeasProblem(pts, constraints)


def format_problem(prob: LinFeasProblem) -> str:
    out = []
    for c in prob.constraints:
        vals = ",".join(str(c.fn(p)) for p in prob.ground)
        out.append(f"{c.relation} {c.bound} : {vals}")
    return "\n".join(out) + "\n"
