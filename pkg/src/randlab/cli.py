"""Batch command-line front end.

Exit codes: 0 success, 1 check failure, 2 name/file resolution, 3 parse
error, 4 budget exceeded.  All numeric output is exact `p/q`; `--decimal`
adds a rounded rendering for humans without affecting exit codes.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .axioms import check_axioms, default_formula_corpus, sample_elements
from .cformulas import DEFAULT_BUDGET, eval_cformula, parse_cformula
from .errors import BudgetError, ParseError, RandlabError, ResolutionError
from .extension import (
    FeasibleCertificate,
    extend_measure_eq,
    extend_measure_ineq,
    parse_problem,
)
from .formulas import format_formula, free_vars, parse_formula
from .measure import FinProbSpace, FiberSpace, MeasurableMap, fiber_product, image_measure
from .randomization import (
    EventAlgebra,
    Randomization,
    approximate_by_simple,
    convex_combination,
    d_k,
    event_of,
    mu,
)
from .rtypes import (
    check_omega_categoricity,
    d_metric,
    realize,
    rtype_of,
    rtype_of_over,
)
from .semantics import isolating_formula, type_space
from .stability import PhiContext, check_independence, certify_nonforking, rho, rho_hat
from .structures import FinStructure
from .workspace import Workspace, load_workspace

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_RESOLVE = 2
EXIT_PARSE = 3
EXIT_BUDGET = 4


def fmt_rat(x: Fraction, decimal: int | None) -> str:
    base = f"{x.numerator}/{x.denominator}"
    if decimal is not None:
        return f"{base} ({float(x):.{decimal}f})"
    return base


def _load_ws(path: str | None) -> Workspace:
    if path is None:
        return Workspace()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return load_workspace(fh.read())
    except OSError as exc:
        raise ResolutionError(f"cannot read workspace {path!r}: {exc}") from exc


def _parse_bindings(ws: Workspace, rand_name: str, spec: str | None):
    env = {}
    if not spec:
        return env
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ParseError(f"binding {chunk!r} must look like var=name")
        var, _, obj = chunk.partition("=")
        var, obj = var.strip(), obj.strip()
        if obj in ws.elements:
            owner, el = ws.elements[obj]
            if owner != rand_name:
                raise ResolutionError(
                    f"element {obj!r} belongs to {owner!r}, not {rand_name!r}"
                )
            env[var] = el
        elif obj in ws.events:
            owner, ev = ws.events[obj]
            if owner != rand_name:
                raise ResolutionError(
                    f"event {obj!r} belongs to {owner!r}, not {rand_name!r}"
                )
            env[var] = ev
        else:
            raise ResolutionError(f"unknown element or event {obj!r}")
    return env


def _elements_by_names(ws: Workspace, rand_name: str, spec: str):
    out = []
    for name in [s for s in spec.split(",") if s.strip()]:
        owner, el = ws.element(name.strip())
        if owner != rand_name:
            raise ResolutionError(
                f"element {name!r} belongs to {owner!r}, not {rand_name!r}"
            )
        out.append(el)
    return out


def _int_list(spec: str) -> tuple[int, ...]:
    return tuple(int(s) for s in spec.split(",") if s.strip())


# --- Commands ---------------------------------------------------------------------

def cmd_eval(args, ws: Workspace) -> int:
    rand = ws.randomization(args.rand)
    cf = parse_cformula(args.cformula, rand.signature)
    env = _parse_bindings(ws, args.rand, args.bind)
    value = eval_cformula(rand, cf, env, budget=args.budget)
    print(fmt_rat(value, args.decimal))
    return EXIT_OK


def _report_lines(lines: list[str]) -> int:
    failed = False
    for line in lines:
        print(line)
        if line.startswith("FAIL"):
            failed = True
    return EXIT_CHECK if failed else EXIT_OK


def cmd_check(args, ws: Workspace) -> int:
    if args.what == "axioms":
        rand = ws.randomization(args.rand)
        report = check_axioms(rand)
        return _report_lines(report.lines())
    if args.what == "types":
        st = ws.structure(args.structure)
        return _report_lines(_types_identity_lines(st, args.samples))
    if args.what == "categoricity":
        st = ws.structure(args.structure)
        report = check_omega_categoricity(st, args.nmax)
        return _report_lines(report.lines())
    if args.what == "stability":
        st = ws.structure(args.structure)
        return _report_lines(_stability_lines(st, args.phi))
    if args.what == "independence":
        rand = ws.randomization(args.rand)
        c = _elements_by_names(ws, args.rand, args.c)
        b = _elements_by_names(ws, args.rand, args.b)
        a = _elements_by_names(ws, args.rand, args.A) if args.A else []
        verdict = check_independence(rand, c, b, a)
        if verdict.independent:
            print(f"PASS independence checked={verdict.checked}")
            return EXIT_OK
        print(
            f"FAIL independence witness {format_formula(verdict.witness)} "
            f"lhs {fmt_rat(verdict.lhs, args.decimal)} "
            f"rhs {fmt_rat(verdict.rhs, args.decimal)}"
        )
        return EXIT_CHECK
    raise ParseError(f"unknown check {args.what!r}")


def _types_identity_lines(st: FinStructure, samples: int) -> list[str]:
    """The types-as-measures identity on a default base, per corpus formula."""
    import random

    rng = random.Random(7)
    base = FinProbSpace.uniform(4)
    rand = Randomization.constant(st, base)
    pool = sample_elements(rand, 6, seed=7)
    lines = []
    ok_all = True
    for phi in default_formula_corpus(st.signature):
        fv = sorted(free_vars(phi))
        ok = True
        for _ in range(max(1, samples // 8)):
            tup = [rng.choice(pool) for _ in fv]
            nu = rtype_of(rand, tup)
            lhs = nu.formula_mass(phi, fv)
            rhs = mu(rand, event_of(rand, phi, dict(zip(fv, tup))))
            if lhs != rhs:
                ok = ok_all = False
                break
        lines.append(
            f"{'PASS' if ok else 'FAIL'} types-identity {format_formula(phi)}"
        )
    return lines


def _stability_lines(st: FinStructure, phi_text: str | None) -> list[str]:
    from .axioms import default_formula_corpus

    lines = []
    if phi_text:
        formulas = [parse_formula(phi_text, st.signature)]
    else:
        formulas = [
            phi
            for phi in default_formula_corpus(st.signature)
            if free_vars(phi) <= {"x", "y"} and free_vars(phi) == {"x", "y"}
        ][:6]
    for phi in formulas:
        ctx = PhiContext(st, phi, ("x",), ("y",), (), ())
        ok = True
        for a_set in ((), (0,)):
            space = type_space(st, 1, a_set)
            for p in space.types:
                for b in st.elements:
                    try:
                        rho(ctx, space, p, b)
                    except AssertionError:
                        ok = False
        lines.append(
            f"{'PASS' if ok else 'FAIL'} rho-consistency {format_formula(phi)}"
        )
    return lines


def cmd_rho(args, ws: Workspace) -> int:
    st = ws.structure(args.structure)
    phi = parse_formula(args.phi, st.signature)
    x_vars = tuple(args.x.split(",")) if args.x else ("x",)
    y_vars = tuple(args.y.split(",")) if args.y else ("y",)
    w_vars = tuple(args.w.split(",")) if args.w else ()
    if args.rho_hat or args.certify:
        p_meas = ws.rmeasure(args.p_measure)
        q_meas = ws.rmeasure(args.q_measure)
        ctx = PhiContext(st, phi, x_vars, y_vars, w_vars)
        if args.certify:
            prob, cert = certify_nonforking(ctx, p_meas, q_meas)
            if isinstance(cert, FeasibleCertificate):
                print("FEASIBLE")
                for point, weight in cert.weights.items():
                    if weight:
                        print(f"  q{point.index}: {fmt_rat(weight, args.decimal)}")
            else:
                print("INFEASIBLE")
                print(f"  certificate: {cert}")
                return EXIT_CHECK
            return EXIT_OK
        print(fmt_rat(rho_hat(ctx, p_meas, q_meas), args.decimal))
        return EXIT_OK
    params = _int_list(args.A) if args.A else ()
    w_values = _int_list(args.w_values) if args.w_values else ()
    ctx = PhiContext(st, phi, x_vars, y_vars, w_vars, w_values or None)
    space = type_space(st, len(x_vars), params)
    if args.p.startswith("q"):
        p = space.types[int(args.p[1:])]
    else:
        p = space.type_of(_int_list(args.p))
    b = _int_list(args.b)
    print(fmt_rat(rho(ctx, space, p, b), args.decimal))
    return EXIT_OK


def cmd_realize(args, ws: Workspace) -> int:
    nu = ws.rmeasure(args.rmeasure)
    if args.rand:
        rand = ws.randomization(args.rand)
    else:
        rand = Randomization.constant(
            nu.space.structure, FinProbSpace([("w", Fraction(1))])
        )
    refined, elements = realize(rand, nu)
    base = refined.rand.base
    print("space " + ", ".join(fmt_rat(base.weight[p], None) for p in base.points))
    for i, el in enumerate(elements):
        print(f"element x{i} = [" + ", ".join(str(el(p)) for p in base.points) + "]")
    back = rtype_of_over(refined.rand, elements, nu.space)
    print(f"round-trip {'exact' if back == nu else 'MISMATCH'}")
    return EXIT_OK if back == nu else EXIT_CHECK


def cmd_dmetric(args, ws: Workspace) -> int:
    nu1 = ws.rmeasure(args.m1)
    nu2 = ws.rmeasure(args.m2)
    print(fmt_rat(d_metric(nu1, nu2), args.decimal))
    return EXIT_OK


def cmd_fiber(args, ws: Workspace) -> int:
    mu_sp = ws.space(args.mu)
    nu_sp = ws.space(args.nu)
    pix = _int_list(args.pix)
    piy = _int_list(args.piy)
    z_points = tuple(sorted(set(pix) | set(piy)))
    fx = MeasurableMap(mu_sp.points, z_points, dict(zip(mu_sp.points, pix)))
    fy = MeasurableMap(nu_sp.points, z_points, dict(zip(nu_sp.points, piy)))
    fib = FiberSpace(fx, fy)
    prod = fiber_product(mu_sp, nu_sp, fib)
    for p in prod.points:
        print(f"({p[0]},{p[1]}): {fmt_rat(prod.weight[p], args.decimal)}")
    mx = image_measure(prod, fib.proj_x())
    my = image_measure(prod, fib.proj_y())
    ok = mx.weight == mu_sp.weight and my.weight == nu_sp.weight
    print(f"marginals {'exact' if ok else 'MISMATCH'}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_extend(args, ws: Workspace) -> int:
    try:
        with open(args.problem, "r", encoding="utf-8") as fh:
            prob = parse_problem(fh.read())
    except OSError as exc:
        raise ResolutionError(f"cannot read problem {args.problem!r}: {exc}") from exc
    rels = prob.relations()
    cert = extend_measure_eq(prob) if rels == {"="} else extend_measure_ineq(prob)
    if isinstance(cert, FeasibleCertificate):
        print("FEASIBLE")
        print(
            "  mu = "
            + ", ".join(
                fmt_rat(cert.weights[p], args.decimal) for p in prob.ground
            )
        )
    else:
        print("INFEASIBLE")
        print(f"  certificate: {cert}")
    ok = cert.verify(prob)
    print(f"certificate {'verifies' if ok else 'DOES NOT VERIFY'}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_convex(args, ws: Workspace) -> int:
    parts = []
    for chunk in args.parts.split(","):
        weight_text, _, name = chunk.strip().partition(":")
        parts.append((Fraction(weight_text), ws.randomization(name.strip())))
    combined = convex_combination(parts)
    base = combined.base
    print(
        "space "
        + ", ".join(fmt_rat(base.weight[p], None) for p in base.points)
    )
    report = check_axioms(combined)
    return _report_lines(report.lines())


def cmd_approx_simple(args, ws: Workspace) -> int:
    rand = ws.randomization(args.rand)
    _, f = ws.element(args.f)
    gens = []
    for name in args.algebra.split(";"):
        if name.strip():
            owner, ev = ws.event(name.strip())
            if owner != args.rand:
                raise ResolutionError(f"event {name!r} belongs to {owner!r}")
            gens.append(ev)
    algebra = EventAlgebra(rand, gens)
    eps = Fraction(args.eps)
    g = approximate_by_simple(rand, f, algebra, eps)
    print("g = [" + ", ".join(str(g(p)) for p in rand.base.points) + "]")
    print("dK " + fmt_rat(d_k(rand, f, g), args.decimal))
    return EXIT_OK


def cmd_types(args, ws: Workspace) -> int:
    st = ws.structure(args.structure)
    params = _int_list(args.params) if args.params else ()
    space = type_space(st, args.arity, params)
    for q in space.types:
        iso = isolating_formula(space, q)
        orbit = space.orbit(q)
        print(
            f"q{q.index} rep {q.rep} orbit-size {len(orbit)} "
            f"isolated-by {format_formula(iso)}"
        )
    return EXIT_OK


# --- Entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="randlab",
        description="compute with randomizations of finite first-order structures",
    )
    ap.add_argument("--workspace", help="workspace file to load")
    ap.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    ap.add_argument("--decimal", type=int, default=None)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a continuous formula")
    p.add_argument("--rand", required=True)
    p.add_argument("--cformula", required=True)
    p.add_argument("--bind", help="var=element[,var=event,...]")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("check", help="run a verification suite")
    p.add_argument(
        "what",
        choices=["axioms", "types", "categoricity", "stability", "independence"],
    )
    p.add_argument("--rand")
    p.add_argument("--structure")
    p.add_argument("--nmax", type=int, default=2)
    p.add_argument("--samples", type=int, default=24)
    p.add_argument("--phi")
    p.add_argument("--c")
    p.add_argument("--b")
    p.add_argument("--A", default="")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("rho", help="nonforking instance probabilities")
    p.add_argument("--structure", required=True)
    p.add_argument("--phi", required=True)
    p.add_argument("--p", help="type: qN or comma tuple")
    p.add_argument("--b", help="element tuple")
    p.add_argument("--A", default="")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--w")
    p.add_argument("--w-values", dest="w_values")
    p.add_argument("--rho-hat", dest="rho_hat", action="store_true")
    p.add_argument("--certify", action="store_true")
    p.add_argument("--p-measure", dest="p_measure")
    p.add_argument("--q-measure", dest="q_measure")
    p.set_defaults(fn=cmd_rho)

    p = sub.add_parser("realize", help="realize a type measure")
    p.add_argument("--rmeasure", required=True)
    p.add_argument("--rand")
    p.set_defaults(fn=cmd_realize)

    p = sub.add_parser("dmetric", help="distance between type measures")
    p.add_argument("--m1", required=True)
    p.add_argument("--m2", required=True)
    p.set_defaults(fn=cmd_dmetric)

    p = sub.add_parser("fiber", help="fiber product of two spaces")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--pix", required=True, help="base index per mu point")
    p.add_argument("--piy", required=True, help="base index per nu point")
    p.set_defaults(fn=cmd_fiber)

    p = sub.add_parser("extend", help="measure extension with certificates")
    p.add_argument("--problem", required=True, help="constraint file")
    p.set_defaults(fn=cmd_extend)

    p = sub.add_parser("convex", help="convex combination of randomizations")
    p.add_argument("--parts", required=True, help="w1:r1,w2:r2,...")
    p.set_defaults(fn=cmd_convex)

    p = sub.add_parser("approx-simple", help="simple approximation of an element")
    p.add_argument("--rand", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--algebra", required=True, help="event names joined by ;")
    p.add_argument("--eps", required=True)
    p.set_defaults(fn=cmd_approx_simple)

    p = sub.add_parser("types", help="list a classical type space")
    p.add_argument("--structure", required=True)
    p.add_argument("--arity", type=int, default=1)
    p.add_argument("--params", default="")
    p.set_defaults(fn=cmd_types)

    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        ws = _load_ws(args.workspace)
        return args.fn(args, ws)
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ResolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOLVE
    except RandlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOLVE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOLVE


if __name__ == "__main__":
    sys.exit(main())
