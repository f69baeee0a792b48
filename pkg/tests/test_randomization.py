import itertools
import random
from fractions import Fraction

import pytest

from randlab import (
    EventAlgebra,
    FinProbSpace,
    RandomElement,
    Randomization,
    ValidationError,
    approximate_by_simple,
    convex_combination,
    d_b,
    d_k,
    event_of,
    event_witness,
    eval_cformula,
    fullness_witness,
    mu,
    parse_cformula,
    parse_formula,
    rtype_of,
)
from randlab.formulas import Exists
from randlab.randomization import inject_element

F = Fraction


def test_make_randomization_counts(m2, c3, skewed_base):
    r = Randomization.constant(m2, FinProbSpace.dyadic(3))
    assert r.carrier_size() == 256
    rc = Randomization.constant(c3, skewed_base)
    assert rc.carrier_size() == 27


def test_mixed_signatures_rejected(m2, c3):
    base = FinProbSpace.dyadic(1)
    with pytest.raises(ValidationError):
        Randomization(base, {0: m2, 1: c3})


def test_event_of_examples(m2, c3, coin_rand):
    f = coin_rand.element([0, 1])
    g = coin_rand.element([0, 0])
    phi = parse_formula("x = y", m2.signature)
    assert event_of(coin_rand, phi, {"x": f, "y": g}) == frozenset({0})

    rc = Randomization.constant(c3, FinProbSpace.uniform(3))
    anyf = rc.element([2, 0, 1])
    out = parse_formula("exists z (E(x, z))", c3.signature)
    assert event_of(rc, out, {"x": anyf}) == rc.full_event()


def test_distance_examples(coin_rand):
    assert mu(coin_rand, coin_rand.full_event()) == 1
    assert mu(coin_rand, frozenset()) == 0
    f = coin_rand.element([0, 1])
    g = coin_rand.element([0, 0])
    assert d_k(coin_rand, f, g) == F(1, 2)
    base4 = Randomization.constant(coin_rand.structure, FinProbSpace.uniform(4))
    assert d_b(base4, frozenset({0, 1}), frozenset({1, 2})) == F(1, 2)


def test_fullness_witness_examples(m2, c3, coin_rand):
    phi = parse_formula("!(x = y)", m2.signature)
    g0 = RandomElement.constant(coin_rand.base, 0)
    f = fullness_witness(coin_rand, phi, "x", {"y": g0})
    assert all(f(w) == 1 for w in coin_rand.base.points)
    assert event_of(coin_rand, phi, {"x": f, "y": g0}) == coin_rand.full_event()

    # unsatisfiable: both events empty
    bad = parse_formula("!(x = x)", m2.signature)
    fb = fullness_witness(coin_rand, bad, "x", {})
    assert event_of(coin_rand, bad, {"x": fb}) == frozenset()

    rc = Randomization.constant(c3, FinProbSpace.uniform(3))
    succ = parse_formula("E(y, x)", c3.signature)
    g = RandomElement.constant(rc.base, 0)
    w = fullness_witness(rc, succ, "x", {"y": g})
    assert all(w(p) == 1 for p in rc.base.points)


def test_fullness_witness_exact_on_corpus(c3):
    from randlab.axioms import default_formula_corpus, sample_elements

    rc = Randomization.constant(c3, FinProbSpace.uniform(4))
    pool = sample_elements(rc, 5)
    rng = random.Random(3)
    from randlab.formulas import free_vars

    for phi in default_formula_corpus(c3.signature)[:30]:
        if "x" not in free_vars(phi):
            continue
        rest = sorted(free_vars(phi) - {"x"})
        binding = {v: rng.choice(pool) for v in rest}
        f = fullness_witness(rc, phi, "x", binding)
        assert event_of(rc, phi, {**binding, "x": f}) == event_of(
            rc, Exists("x", phi), binding
        )


def test_event_witness_examples(coin_rand, m2):
    phi = parse_formula("x = y", m2.signature)
    for e in (coin_rand.full_event(), frozenset(), frozenset({1})):
        f, g = event_witness(coin_rand, e)
        assert event_of(coin_rand, phi, {"x": f, "y": g}) == e
    base4 = Randomization.constant(m2, FinProbSpace.uniform(4))
    e = frozenset({0, 1})
    f, g = event_witness(base4, e)
    assert d_b(base4, event_of(base4, phi, {"x": f, "y": g}), e) == 0


def test_transfer_sentences(c3):
    rc = Randomization.constant(c3, FinProbSpace.uniform(5))
    true_sentence = parse_formula("forall x (exists y (E(x, y)))", c3.signature)
    false_sentence = parse_formula("exists x (E(x, x))", c3.signature)
    assert mu(rc, event_of(rc, true_sentence, {})) == 1
    assert mu(rc, event_of(rc, false_sentence, {})) == 0


def test_boolean_identities_exhaustive_small(m2):
    # connective identities for every pair of corpus formulas over a tiny base
    from randlab.axioms import default_formula_corpus, sample_elements
    from randlab.formulas import And, Not, Or, free_vars

    r = Randomization.constant(m2, FinProbSpace.dyadic(2))
    pool = sample_elements(r, 4)
    corpus = default_formula_corpus(m2.signature)[:12]
    top = r.full_event()
    for phi, psi in itertools.combinations(corpus, 2):
        fv = sorted(free_vars(phi) | free_vars(psi))
        binding = {v: pool[i % len(pool)] for i, v in enumerate(fv)}
        e1 = event_of(r, phi, binding)
        e2 = event_of(r, psi, binding)
        assert event_of(r, Not(phi), binding) == top - e1
        assert event_of(r, Or(phi, psi), binding) == e1 | e2
        assert event_of(r, And(phi, psi), binding) == e1 & e2


def test_dk_zero_iff_equal(coin_rand):
    f = coin_rand.element([0, 1])
    g = coin_rand.element([0, 1])
    h = coin_rand.element([1, 1])
    assert d_k(coin_rand, f, g) == 0 and f == g
    assert d_k(coin_rand, f, h) > 0


def test_convex_combination_examples(m2, c3):
    sig = m2.signature
    phi = parse_formula("exists y (!(x = y))", sig)  # sentence-ish with x
    # sentence with measure 1 vs measure 0: use a 0-ary mix via P over constant
    r1 = Randomization.constant(m2, FinProbSpace.dyadic(1))
    r2 = Randomization.constant(m2, FinProbSpace.uniform(3))
    combo = convex_combination([(F(1, 2), r1), (F(1, 2), r2)])
    assert sum(combo.base.weight.values()) == 1

    # measure identity: mu[[phi(f)]] = sum of part weights times part measures
    f1 = r1.element([0, 1])
    f2 = r2.element([1, 0, 0])
    lifted = {}
    for label in combo.base.points:
        i, p = label
        lifted[label] = f1(p) if i == 0 else f2(p)
    f = RandomElement(combo.base, lifted)
    psi = parse_formula("x = #0", sig)
    lhs = mu(combo, event_of(combo, psi, {"x": f}))
    rhs = F(1, 2) * mu(r1, event_of(r1, psi, {"x": f1})) + F(1, 2) * mu(
        r2, event_of(r2, psi, {"x": f2})
    )
    assert lhs == rhs


def test_convex_combination_splits_a_sentence(c3):
    # a part where the sentence holds surely mixed with one where it fails
    # surely: the combined measure is the mixing weight
    from randlab.structures import FinStructure

    sig = c3.signature
    no_edges = FinStructure(sig, 3, relations={"E": set()})
    r_true = Randomization.constant(c3, FinProbSpace.dyadic(1))
    r_false = Randomization.constant(no_edges, FinProbSpace.dyadic(1))
    combo = convex_combination([(F(1, 2), r_true), (F(1, 2), r_false)])
    sigma = parse_formula("exists x (exists y (E(x, y)))", sig)
    assert mu(r_true, event_of(r_true, sigma, {})) == 1
    assert mu(r_false, event_of(r_false, sigma, {})) == 0
    assert mu(combo, event_of(combo, sigma, {})) == F(1, 2)


def test_convex_combination_identity_case(m2):
    r1 = Randomization.constant(m2, FinProbSpace.dyadic(1))
    combo = convex_combination([(F(1), r1)])
    psi = parse_formula("x = #0", m2.signature)
    f1 = r1.element([0, 1])
    f = inject_element(combo, 0, f1)
    assert mu(combo, event_of(combo, psi, {"x": f})) == mu(
        r1, event_of(r1, psi, {"x": f1})
    )


def test_convex_combination_weight_validation(m2):
    r1 = Randomization.constant(m2, FinProbSpace.dyadic(1))
    with pytest.raises(ValidationError):
        convex_combination([(F(1, 2), r1), (F(1, 3), r1)])


def test_mixed_family_sentence_measures(m2, c3):
    # non-constant families exist too: a per-point structure family over a
    # shared signature gets sentence measures strictly between 0 and 1
    sig = c3.signature
    from randlab.structures import FinStructure

    no_edges = FinStructure(sig, 3, relations={"E": set()})
    base = FinProbSpace.dyadic(1)
    rand = Randomization(base, {0: c3, 1: no_edges})
    sigma = parse_formula("exists x (exists y (E(x, y)))", sig)
    assert mu(rand, event_of(rand, sigma, {})) == F(1, 2)


def test_approximate_measurable_input(m2):
    r3 = Randomization.constant(m2, FinProbSpace.dyadic(3))
    algebra = EventAlgebra(r3, [frozenset({0, 1}), frozenset({2, 3}), frozenset({4, 5})])
    f = r3.element([0, 0, 1, 1, 0, 0, 1, 1])
    g = approximate_by_simple(r3, f, algebra, F(1, 100))
    assert d_k(r3, f, g) == 0


def test_approximate_spec_example(m2):
    r3 = Randomization.constant(m2, FinProbSpace.dyadic(3))
    algebra = EventAlgebra(r3, [frozenset({0, 1}), frozenset({2, 3}), frozenset({4, 5})])
    f = r3.element([0, 1, 0, 1, 0, 1, 0, 1])
    g = approximate_by_simple(r3, f, algebra, F(1))
    assert d_k(r3, f, g) <= F(1, 2) < F(1)


def test_approximate_large_eps_accepts_anything(m2):
    r3 = Randomization.constant(m2, FinProbSpace.dyadic(2))
    algebra = EventAlgebra(r3, [])  # trivial algebra
    f = r3.element([0, 1, 1, 0])
    g = approximate_by_simple(r3, f, algebra, F(2))
    assert d_k(r3, f, g) <= 1 < 2


def test_approximate_budget_arithmetic(m2):
    # when the algebra is dense enough, the construction meets the staged
    # bounds: head mass, per-level rounding, disjointified pieces, total
    r3 = Randomization.constant(m2, FinProbSpace.dyadic(3))
    algebra = EventAlgebra(r3, [frozenset({i}) for i in range(8)])
    f = r3.element([0, 1, 0, 1, 0, 0, 1, 1])
    eps = F(1, 2)
    g, trace = approximate_by_simple(r3, f, algebra, eps, with_trace=True)
    n = trace.n
    assert trace.head_mass > 1 - eps / 2
    for level in trace.levels:
        assert level["approx_error"] < eps / (4 * n * n)
        assert level["piece_error"] < eps / (2 * n)
    assert d_k(r3, f, g) < eps


def test_approximate_reports_worst_level(m2):
    r3 = Randomization.constant(m2, FinProbSpace.dyadic(3))
    algebra = EventAlgebra(r3, [])  # too coarse for a fine eps
    f = r3.element([0, 1, 0, 1, 0, 1, 0, 1])
    with pytest.raises(ValidationError) as err:
        approximate_by_simple(r3, f, algebra, F(1, 4))
    assert "level set" in str(err.value)


def test_qe_consequence_same_type_measures_same_cformula_values(m2):
    # tuples with identical type measures agree on every continuous formula,
    # including quantified ones
    r = Randomization.constant(m2, FinProbSpace.uniform(4))
    f1, g1 = r.element([0, 0, 1, 1]), r.element([0, 1, 0, 1])
    f2, g2 = r.element([1, 1, 0, 0]), r.element([1, 0, 1, 0])
    assert rtype_of(r, [f1, g1]) == rtype_of(r, [f2, g2])
    corpus = [
        "mu[[ x = y ]]",
        "~mu[[ x = y ]] -. 1/3",
        "min(mu[[ x = y ]], half(mu[[ !(x = y) ]]))",
        "sup z (mu[[ z = x ]] -. mu[[ z = y ]])",
        "inf z (max(mu[[ z = x ]], mu[[ z = y ]]))",
    ]
    for text in corpus:
        cf = parse_cformula(text, m2.signature)
        v1 = eval_cformula(r, cf, {"x": f1, "y": g1})
        v2 = eval_cformula(r, cf, {"x": f2, "y": g2})
        assert v1 == v2, text
