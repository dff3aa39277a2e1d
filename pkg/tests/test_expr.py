import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kosolve.errors import DomainError, ExprSyntaxError, UnknownVariable
from kosolve.expr import (
    BinOp,
    Num,
    Var,
    check_sampled_properties,
    evaluate,
    parse,
)

R = {"r"}
UV = {"u", "v"}


def test_power_of_shifted_radius():
    e = parse("(1+r)^(-4)", R)
    assert isinstance(e.root, BinOp) and e.root.op == "^"
    assert evaluate(e, {"r": 1.0}) == 0.0625


def test_sum_of_components():
    e = parse("u + v", UV)
    assert e.root == BinOp("+", Var("u"), Var("v"))
    assert evaluate(e, {"u": 0.5, "v": 0.5}) == 1.0


def test_dangling_operator_reports_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse("r +", R)
    assert info.value.position == 3


@pytest.mark.parametrize("text", ["", "(r", "r)", "2**3", "exp(r, r)", "r $ 2", "min(r)"])
def test_malformed_inputs(text):
    with pytest.raises(ExprSyntaxError):
        parse(text, R)


def test_unknown_variable_and_function():
    with pytest.raises(UnknownVariable) as info:
        parse("u + r", UV)
    assert info.value.name == "r"
    with pytest.raises(ExprSyntaxError):
        parse("sin(r)", R)


@pytest.mark.parametrize(
    "text, bindings",
    [("log(r)", {"r": 0.0}), ("sqrt(r)", {"r": -1.0}), ("1/r", {"r": 0.0}),
     ("r^(-1)", {"r": 0.0}), ("r^0.5", {"r": -2.0})],
)
def test_domain_errors(text, bindings):
    with pytest.raises(DomainError):
        evaluate(parse(text, R), bindings)


def test_precedence_and_associativity():
    assert evaluate(parse("2+3*4", R), {}) == 14
    assert evaluate(parse("2^3^2", R), {}) == 512
    assert evaluate(parse("-2^2", R), {}) == -4
    assert evaluate(parse("8/4/2", R), {}) == 1
    assert evaluate(parse("max(1, r) + min(2, pow(r, 2))", R), {"r": 3.0}) == 5


def test_array_evaluation_broadcasts_constants():
    r = np.linspace(0, 1, 5)
    np.testing.assert_allclose(parse("exp(-r)", R).eval({"r": r}), np.exp(-r))
    assert parse("2", R).eval({"r": r}) == 2.0


def test_scalar_function_matches_array_eval():
    e = parse("u*log(exp(1)+u)^2 + sqrt(v)", UV)
    fn = e.scalar_function("u", "v")
    for u, v in [(0.0, 0.0), (0.5, 2.0), (30.0, 7.0)]:
        assert fn(u, v) == pytest.approx(e.eval({"u": u, "v": v}), rel=1e-14)


def test_log_evaluation_survives_overflow():
    e = parse("exp(2*r)*r", R)
    s, l = e.eval_log({"r": np.array([1.0, 1e4])})
    assert np.all(s == 1)
    assert l[1] == pytest.approx(2e4 + math.log(1e4))
    assert l[0] == pytest.approx(2 + 0.0)


def test_sampled_properties():
    assert check_sampled_properties(parse("u+v", UV), "nondecreasing_each_var") == []
    bad = check_sampled_properties(parse("u - v", UV), "nondecreasing_each_var")
    assert bad and all("v" in x.detail for x in bad)
    assert check_sampled_properties(parse("exp(-r)", R), "nonneg_on_ray") == []
    assert check_sampled_properties(parse("r - 1", R), "nonneg_on_ray")
    assert check_sampled_properties(parse("u*v", UV), "positive_when_positive")


def test_evaluation_is_pure():
    e = parse("r^2 + 1", R)
    assert e.eval({"r": 3.0}) == e.eval({"r": 3.0}) == 10.0


# random expression texts built from the grammar
_atoms = st.one_of(
    st.sampled_from(["u", "v"]),
    st.floats(min_value=0, max_value=1e6, allow_nan=False).map(repr),
    st.integers(min_value=0, max_value=99).map(str),
)


def _extend(children):
    binop = st.tuples(children, st.sampled_from(["+", "-", "*", "/", "^"]), children).map(
        lambda t: f"({t[0]} {t[1]} {t[2]})"
    )
    unary = children.map(lambda c: f"-{c}")
    call1 = st.tuples(st.sampled_from(["exp", "log", "sqrt", "abs"]), children).map(
        lambda t: f"{t[0]}({t[1]})"
    )
    call2 = st.tuples(st.sampled_from(["min", "max", "pow"]), children, children).map(
        lambda t: f"{t[0]}({t[1]}, {t[2]})"
    )
    return st.one_of(binop, unary, call1, call2)


expressions = st.recursive(_atoms, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(expressions)
def test_print_parse_round_trip(text):
    tree = parse(text, UV)
    again = parse(tree.to_text(), UV)
    assert again.root == tree.root
    assert again == tree


def test_number_nodes_are_plain_floats():
    assert parse("1e3", R).root == Num(1000.0)
