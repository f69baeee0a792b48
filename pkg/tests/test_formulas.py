import pytest
from hypothesis import given, strategies as st

from randlab import ParseError, parse_formula, format_formula, free_vars
from randlab.formulas import (
    And,
    Elem,
    Eq,
    Exists,
    Forall,
    Implies,
    Not,
    Or,
    Rel,
    Var,
    substitute,
)
from randlab.structures import Signature

SIG = Signature(relations={"E": 2})


def test_parse_conjunction_and_free_vars():
    phi = parse_formula("E(x,y) & !(x = y)", SIG)
    assert phi == And(Rel("E", (Var("x"), Var("y"))), Not(Eq(Var("x"), Var("y"))))
    assert free_vars(phi) == {"x", "y"}


def test_parse_exists():
    phi = parse_formula("exists z (E(x,z) & E(z,y))", SIG)
    assert isinstance(phi, Exists)
    assert free_vars(phi) == {"x", "y"}


def test_arity_mismatch_is_an_error():
    with pytest.raises(ParseError):
        parse_formula("E(x)", SIG)


def test_unknown_symbol_is_an_error():
    with pytest.raises(ParseError):
        parse_formula("F(x, y)", SIG)


def test_error_carries_position():
    try:
        parse_formula("E(x,y) & ", SIG)
    except ParseError as exc:
        assert exc.position is not None
    else:
        pytest.fail("expected a parse error")


def test_element_literals_parse():
    phi = parse_formula("x = #1", SIG)
    assert phi == Eq(Var("x"), Elem(1))


def test_implication_is_right_associative():
    phi = parse_formula("x = y -> x = z -> y = z", SIG)
    assert isinstance(phi, Implies)
    assert isinstance(phi.right, Implies)


def test_precedence_and_binds_tighter_than_or():
    phi = parse_formula("x = y | x = z & y = z", SIG)
    assert isinstance(phi, Or)
    assert isinstance(phi.right, And)


def _formulas(depth: int):
    atoms = st.sampled_from(
        [
            Eq(Var("x"), Var("y")),
            Eq(Var("z"), Elem(0)),
            Rel("E", (Var("x"), Var("z"))),
            Rel("E", (Var("y"), Var("y"))),
        ]
    )
    if depth == 0:
        return atoms
    sub = _formulas(depth - 1)
    return st.one_of(
        atoms,
        st.builds(Not, sub),
        st.builds(And, sub, sub),
        st.builds(Or, sub, sub),
        st.builds(Implies, sub, sub),
        st.builds(Exists, st.just("w"), sub),
        st.builds(Forall, st.just("w"), sub),
    )


@given(_formulas(3))
def test_printer_round_trips(phi):
    assert parse_formula(format_formula(phi), SIG) == phi


def test_substitute_avoids_capture():
    phi = Exists("z", Eq(Var("z"), Var("x")))
    out = substitute(phi, {"x": Var("z")})
    assert isinstance(out, Exists)
    assert out.var != "z"
    assert free_vars(out) == {"z"}
