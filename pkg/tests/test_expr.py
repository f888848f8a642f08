"""Expression parser: grammar, errors, jet evaluation, round-tripping."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from maflow import jets
from maflow.errors import ArityError, DomainError, ParseError, UnknownIdentifier
from maflow.expr import (Bin, Call, Ident, Neg, Num, Pow, evaluate, free_names,
                         parse_expression, to_string)
from maflow.jets import extract_partial, seed_point


def ev(text, **env):
    return evaluate(parse_expression(text), env)


def test_basic_arithmetic_and_precedence():
    assert ev("1 + 2 * 3") == 7.0
    assert ev("(1 + 2) * 3") == 9.0
    assert ev("2 ^ 3 * 2") == 16.0
    assert ev("6 / 3 / 2") == 1.0  # left associative
    assert ev("1 - 2 - 3") == -4.0
    assert ev("2 * x + 1", x=4.0) == 9.0


def test_unary_minus_binds_at_atom_level():
    # '-x^2' parses as '(-x)^2' by the grammar
    assert ev("-2 ^ 2") == 4.0
    assert ev("-x ^ 2", x=3.0) == 9.0
    assert ev("0 - x ^ 2", x=3.0) == -9.0


def test_functions_and_nesting():
    assert ev("sin(0)") == 0.0
    assert ev("exp(log(5))") == pytest.approx(5.0)
    assert ev("sqrt(x ^ 2 + y ^ 2)", x=3.0, y=4.0) == pytest.approx(5.0)
    assert ev("atan(tan(0.3))") == pytest.approx(0.3)
    assert ev("cosh(x) ^ 2 - sinh(x) ^ 2", x=0.7) == pytest.approx(1.0)


def test_constant_exponents_only():
    assert ev("x ^ (2 + 1)", x=2.0) == 8.0
    assert ev("x ^ -2", x=2.0) == 0.25
    with pytest.raises(ParseError):
        parse_expression("x ^ y")
    with pytest.raises(ParseError):
        parse_expression("2 ^ sin(1)")


def test_parse_error_offsets():
    with pytest.raises(ParseError) as err:
        parse_expression("sin)")
    assert err.value.offset == 3
    with pytest.raises(ParseError) as err:
        parse_expression("1 + ")
    assert err.value.offset == 4
    with pytest.raises(ParseError) as err:
        parse_expression("(1 + 2")
    assert err.value.offset == 6
    with pytest.raises(ParseError) as err:
        parse_expression("1 @ 2")
    assert err.value.offset == 2


def test_identifier_errors():
    with pytest.raises(UnknownIdentifier):
        ev("x + nope", x=1.0)
    with pytest.raises(UnknownIdentifier):
        ev("noper(3)")
    with pytest.raises(ArityError):
        ev("x(3)", x=1.0)
    with pytest.raises(ArityError):
        ev("sin + 1")


def test_variables_shadow_function_names():
    # a bare function name can be bound as a variable by the environment
    assert ev("sin * 2", sin=3.0) == 6.0


def test_domain_error_from_floats_and_jets():
    with pytest.raises(DomainError):
        ev("log(x)", x=-1.0)
    with pytest.raises(DomainError):
        ev("x ^ 0.5", x=-2.0)
    (xj,) = seed_point((-2.0,), 2)
    with pytest.raises(DomainError):
        evaluate(parse_expression("sqrt(x)"), {"x": xj})


def test_evaluation_on_jets_matches_floats_and_derivatives():
    text = "exp(sin(x) * y) + x ^ 3 / (1 + y ^ 2)"
    pt = (0.7, -0.4)
    xj, yj = seed_point(pt, 3)
    jet_val = evaluate(parse_expression(text), {"x": xj, "y": yj})
    float_val = ev(text, x=pt[0], y=pt[1])
    assert jet_val.value == pytest.approx(float_val, rel=1e-14)

    def f(x, y):
        return math.exp(math.sin(x) * y) + x ** 3 / (1 + y ** 2)

    from oracles import fd_partial
    assert extract_partial(jet_val, (1, 0)) == pytest.approx(
        fd_partial(f, pt, (1, 0)), rel=1e-7)
    assert extract_partial(jet_val, (1, 1)) == pytest.approx(
        fd_partial(f, pt, (1, 1)), rel=1e-6, abs=1e-8)


def test_free_names():
    names = free_names(parse_expression("a * sin(b + c) ^ 2 - d"))
    assert names == {"a", "b", "c", "d"}


def _ast_strategy():
    leaves = st.one_of(
        st.floats(min_value=0.25, max_value=4.0).map(lambda v: Num(round(v, 3))),
        st.sampled_from(["x", "y", "t"]).map(Ident),
    )

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from("+-*/"), children, children).map(
                lambda t: Bin(t[0], t[1], t[2])),
            children.map(Neg),
            st.tuples(st.sampled_from(["sin", "cos", "exp", "sqrt"]), children).map(
                lambda t: Call(t[0], t[1])),
            st.tuples(children, st.sampled_from([-2.0, -1.0, 2.0, 3.0])).map(
                lambda t: Pow(t[0], t[1])),
        )

    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=50, deadline=None)
@given(_ast_strategy())
def test_to_string_round_trips(ast):
    text = to_string(ast)
    reparsed = parse_expression(text)
    assert to_string(reparsed) == text
    # structural equality too: dataclasses compare by value
    assert reparsed == ast
