import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypinverse import expr as E
from expr_fixtures import PRECEDENCE, central_difference, random_expression


@pytest.mark.parametrize("source,bindings,expected", PRECEDENCE)
def test_precedence_table(source, bindings, expected):
    assert E.evaluate(E.parse(source), bindings) == pytest.approx(expected, rel=1e-14, abs=1e-14)


def test_parse_examples():
    assert E.evaluate(E.parse("sin(2*pi*x)*cos(t)"), {"x": 0.25, "t": 0.0}) == pytest.approx(1.0)
    assert E.evaluate(E.parse("x^2+1"), x=3) == 10.0


def test_double_star_rejected_at_offset_1():
    with pytest.raises(E.ParseError) as info:
        E.parse("2**x")
    assert info.value.offset == 1


@pytest.mark.parametrize("text,offset", [("x +", 3), ("foo(x)", 0), ("(x", 2), ("x^t", 2), ("", 0), ("2 $", 2)])
def test_parse_errors_carry_offsets(text, offset):
    with pytest.raises(E.ParseError) as info:
        E.parse(text)
    assert info.value.offset == offset


def test_parse_error_expected_set():
    with pytest.raises(E.ParseError) as info:
        E.parse("sin x")
    assert "(" in info.value.expected


def test_byte_offsets_count_utf8():
    with pytest.raises(E.ParseError) as info:
        E.parse("x + é")
    assert info.value.offset == 4


def test_eval_errors():
    with pytest.raises(E.EvalError):
        E.evaluate(E.parse("1/ (x-1)"), x=1)
    with pytest.raises(E.EvalError):
        E.evaluate(E.parse("log(x)"), x=0)
    with pytest.raises(E.EvalError):
        E.evaluate(E.parse("sqrt(x)"), x=-1)
    with pytest.raises(E.UnboundVariable):
        E.evaluate(E.parse("x + t"), x=1)


def test_eval_examples():
    assert E.evaluate(E.parse("exp(0)")) == 1.0
    assert E.evaluate(E.parse("sqrt(2)^2")) == pytest.approx(2.0, abs=1e-15)


def test_vectorized_evaluation_broadcasts():
    out = E.evaluate(E.parse("x*t"), x=np.array([1.0, 2.0])[:, None], t=np.array([1.0, 2.0, 3.0])[None, :])
    assert out.shape == (2, 3)
    const = E.evaluate(E.parse("2"), x=np.zeros(4))
    assert np.shape(const) == (4,)


def test_derivative_examples():
    d = E.differentiate(E.parse("sin(t)"), "t")
    assert E.to_text(d) == "cos(t)"
    d2 = E.differentiate(E.parse("sin(t)"), "t", 2)
    assert E.evaluate(d2, t=0.7) == pytest.approx(-math.sin(0.7))
    assert E.evaluate(E.differentiate(E.parse("x^3"), "x"), x=2) == pytest.approx(12.0)


def test_second_derivative_against_differences():
    e = E.parse("(x+1)*cos(2*pi*x)")
    d2 = E.differentiate(e, "x", 2)
    h = 1e-4
    for x in np.linspace(0.0, 1.0, 101):
        fd = (E.evaluate(e, x=x + h) - 2 * E.evaluate(e, x=x) + E.evaluate(e, x=x - h)) / h**2
        assert abs(E.evaluate(d2, x=x) - fd) <= 1e-6 * max(1.0, abs(fd)) * 100


def test_abs_not_differentiable():
    e = E.parse("abs(x)")
    assert E.evaluate(e, x=-2) == 2.0
    with pytest.raises(E.NonDifferentiable):
        E.differentiate(e, "x")


def test_derivative_of_other_variable_is_zero():
    assert E.evaluate(E.differentiate(E.parse("sin(t)*x"), "x"), t=0.3, x=5) == pytest.approx(math.sin(0.3))
    assert E.to_text(E.differentiate(E.parse("sin(t)"), "x")) == "0"


def test_random_derivatives_match_central_differences():
    rng = random.Random(20240611)
    for _ in range(100):
        e = E.parse(random_expression(rng, 3))
        d = E.differentiate(e, "x")
        for x in (0.15, 0.5, 0.85):
            fd = central_difference(lambda y: E.evaluate(e, x=y), x)
            exact = E.evaluate(d, x=x)
            assert abs(exact - fd) <= 1e-6 * max(1.0, abs(exact))


def test_round_trip_on_random_expressions():
    rng = random.Random(99)
    for _ in range(100):
        text = random_expression(rng, 3)
        e = E.parse(text)
        again = E.parse(E.to_text(e))
        assert again == e
        for x in np.random.default_rng(1).uniform(0, 1, 5):
            assert E.evaluate(again, x=x) == pytest.approx(E.evaluate(e, x=x), rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), st.floats(min_value=-1e3, max_value=1e3))
def test_number_printing_round_trips(a, b):
    e = E.BinOp("-", E.Num(a), E.BinOp("*", E.Num(b), E.Var("x")))
    assert E.evaluate(E.parse(E.to_text(e)), x=1.5) == E.evaluate(e, x=1.5)


def test_parse_is_deterministic():
    assert E.parse("x^2 + sin(t)") == E.parse("x^2   +sin( t )")


def test_free_variables():
    assert E.free_variables(E.parse("x*t + pi")) == {"x", "t"}
