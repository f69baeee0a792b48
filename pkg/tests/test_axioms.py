from fractions import Fraction

from randlab import FinProbSpace, Randomization, check_axioms, default_formula_corpus
from randlab.axioms import EXACT_GROUPS, sentence_corpus, tautology_corpus
from randlab.semantics import eval_formula

F = Fraction


def test_corpus_is_large_enough(m2, c3, l3):
    for st in (m2, c3, l3):
        corpus = default_formula_corpus(st.signature)
        assert len(corpus) >= 40
        assert len({str(phi) for phi in corpus}) == len(corpus)


def test_tautologies_really_are_valid(m2, c3, l3):
    import itertools

    from randlab.formulas import free_vars

    for st in (m2, c3, l3):
        for phi in tautology_corpus(st.signature):
            fv = sorted(free_vars(phi))
            for tup in itertools.product(st.elements, repeat=len(fv)):
                assert eval_formula(st, phi, dict(zip(fv, tup))), (st.name, phi)


def test_axiom_suite_dyadic(m2):
    rand = Randomization.constant(m2, FinProbSpace.dyadic(3))
    report = check_axioms(rand)
    assert report.exact_groups_pass()
    assert report.atomless_defect == F(1, 16)
    assert report.by_group("atomless").passed


def test_axiom_suite_skewed_base(c3, skewed_base):
    rand = Randomization.constant(c3, skewed_base)
    report = check_axioms(rand)
    assert report.exact_groups_pass()
    # the atomless axiom genuinely fails on a non-dyadic base
    assert report.atomless_defect == F(1, 4)
    assert not report.by_group("atomless").passed


def test_corrupted_measure_detected(m2):
    rand = Randomization.constant(m2, FinProbSpace.uniform(4))
    # bypass construction-time validation to hand the checker a broken measure
    rand.base.weight[0] = F(24, 100)
    report = check_axioms(rand)
    assert not report.by_group("measure").passed


def test_report_lines_shape(m2):
    rand = Randomization.constant(m2, FinProbSpace.dyadic(2))
    lines = check_axioms(rand).lines()
    assert len(lines) == len(EXACT_GROUPS) + 1
    assert all(line.startswith(("PASS", "FAIL")) for line in lines)


def test_transfer_group_on_mixed_family(c3):
    from randlab.structures import FinStructure

    sig = c3.signature
    no_edges = FinStructure(sig, 3, relations={"E": set()})
    rand = Randomization(FinProbSpace.dyadic(1), {0: c3, 1: no_edges})
    report = check_axioms(rand)
    assert report.by_group("transfer").passed


def test_sentence_corpus_nonempty(c3):
    assert len(sentence_corpus(c3.signature)) >= 8
