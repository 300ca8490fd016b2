import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptobs.expr import (
    FUNCTIONS,
    ArityError,
    BinOp,
    Call,
    DomainError,
    ExprSyntaxError,
    Neg,
    Num,
    UnknownFunctionError,
    UnknownVariableError,
    Var,
    compile_expr,
    eval_expr,
    format_expr,
    parse_expr,
    real_power,
    variables,
)

VARS = {"x1", "x2", "u"}


def test_literal_zero():
    assert parse_expr("0") == Num(0.0)


def test_structure_of_simple_difference():
    e = parse_expr("x2 - sin(x1)", VARS)
    assert e == BinOp("-", Var("x2"), Call("sin", Var("x1")))


def test_unknown_function_is_reported():
    with pytest.raises(UnknownFunctionError, match="foo") as info:
        parse_expr("x3 + foo(x1)")
    assert info.value.position == 5


def test_unknown_variable_against_allowed_set():
    with pytest.raises(UnknownVariableError, match="x3") as info:
        parse_expr("x1 + x3", VARS)
    assert info.value.position == 5


def test_syntax_error_carries_byte_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("x1 + * x2")
    assert info.value.position == 5
    # offsets count bytes, not characters
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("x1 + é")
    assert info.value.position == 5


@pytest.mark.parametrize("src", ["sin(x1, x2)", "exp()", "cos x1"])
def test_arity_and_call_syntax(src):
    with pytest.raises(ExprSyntaxError):
        parse_expr(src)


def test_two_arguments_is_an_arity_error():
    with pytest.raises(ArityError):
        parse_expr("sin(x1, x2)")


@pytest.mark.parametrize("src", ["", "(", "x1)", "1 2", "x1 +"])
def test_malformed_input(src):
    with pytest.raises(ExprSyntaxError):
        parse_expr(src)


def test_eval_examples():
    assert eval_expr("x2 - sin(x1)", {"x1": 0.5, "x2": 2.0}) == pytest.approx(2 - math.sin(0.5), rel=1e-15)
    assert abs(eval_expr("x2 - sin(x1)", {"x1": 0.5, "x2": 2.0}) - 1.520574461395797) < 1e-15
    assert eval_expr("-x1 - 0.02*x2^3 + u", {"x1": 1, "x2": 2, "u": 0}) == pytest.approx(-1.16, rel=1e-15)
    assert eval_expr("5*sin(2*t)", {"t": 0.0}) == 0.0


def test_precedence_and_associativity():
    assert eval_expr("2^3^2", {}) == 512.0
    assert eval_expr("-2^2", {}) == -4.0
    assert eval_expr("(-2)^2", {}) == 4.0
    assert eval_expr("2*3+4", {}) == 10.0
    assert eval_expr("2+3*4", {}) == 14.0
    assert eval_expr("8/4/2", {}) == 1.0
    assert eval_expr("8-4-2", {}) == 2.0


def test_integer_powers_exact_and_sign_correct():
    assert eval_expr("x2^3", {"x2": -1.5}) == -3.375
    assert real_power(-2.0, 3.0) == -8.0
    assert real_power(3.0, -2.0) == 1.0 / 9.0
    assert real_power(2.0, 0.5) == pytest.approx(math.sqrt(2.0), rel=1e-15)


@pytest.mark.parametrize(
    "src, env, fragment",
    [
        ("log(x1)", {"x1": -1.0}, "log(x1)"),
        ("sqrt(x1 - 2)", {"x1": 1.0}, "sqrt((x1 - 2.0))"),
        ("1/(x1 - x1)", {"x1": 3.0}, "(1.0 / (x1 - x1))"),
        ("x1^0.5", {"x1": -4.0}, "(x1 ^ 0.5)"),
        ("exp(x1)", {"x1": 1e4}, "exp(x1)"),
    ],
)
def test_domain_errors_name_the_subexpression(src, env, fragment):
    with pytest.raises(DomainError) as info:
        eval_expr(src, env)
    assert info.value.subexpr == fragment


def test_missing_binding():
    with pytest.raises(Exception, match="x2"):
        eval_expr("x1 + x2", {"x1": 1.0})


def test_variables_helper():
    assert variables(parse_expr("x1*sin(x2) + u")) == {"x1", "x2", "u"}


def test_all_functions_parse():
    for name in FUNCTIONS:
        e = parse_expr(f"{name}(x1)")
        assert isinstance(e, Call) and e.func == name


# ---------------------------------------------------------------------------
# random expressions
# ---------------------------------------------------------------------------

names = st.sampled_from(["x1", "x2", "u", "t"])
literals = st.one_of(
    st.integers(0, 9).map(float),
    st.floats(0.0, 3.0, allow_nan=False).map(lambda v: round(v, 3)),
)


def _exprs():
    leaf = st.one_of(literals.map(Num), names.map(Var))

    def extend(sub):
        small_power = st.tuples(sub, st.sampled_from([0.0, 1.0, 2.0, 3.0, 0.5])).map(
            lambda p: BinOp("^", p[0], Num(p[1]))
        )
        return st.one_of(
            sub.map(Neg),
            st.tuples(st.sampled_from(FUNCTIONS), sub).map(lambda p: Call(*p)),
            st.tuples(st.sampled_from("+-*/"), sub, sub).map(lambda p: BinOp(*p)),
            small_power,
        )

    return st.recursive(leaf, extend, max_leaves=12)


envs = st.fixed_dictionaries({k: st.floats(-3.0, 3.0, allow_nan=False) for k in ["x1", "x2", "u", "t"]})


def reference_eval(e, env):
    """Straightforward recursive evaluator used as an independent check."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -reference_eval(e.arg, env)
    if isinstance(e, Call):
        v = reference_eval(e.arg, env)
        if e.func == "sign":
            return math.copysign(1.0, v) if v != 0 else 0.0
        if e.func == "abs":
            return math.fabs(v)
        if e.func == "log" and v <= 0:
            raise ValueError
        return getattr(math, e.func)(v)
    a = reference_eval(e.left, env)
    b = reference_eval(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        return a / b
    if a == 0 and b < 0:
        raise ZeroDivisionError
    return math.pow(a, b)


@settings(max_examples=300, deadline=None)
@given(_exprs())
def test_format_then_parse_round_trips(e):
    text = format_expr(e)
    again = parse_expr(text)
    assert again == e
    assert format_expr(again) == text


@settings(max_examples=1000, deadline=None)
@given(_exprs(), envs)
def test_compiled_program_matches_tree_walk(e, env):
    try:
        ref = reference_eval(e, env)
    except (ValueError, ZeroDivisionError, OverflowError):
        ref = None
    if ref is not None and not math.isfinite(ref):
        ref = None
    prog = compile_expr(e, ["x1", "x2", "u", "t"])
    if ref is None:
        with pytest.raises(DomainError):
            prog.evaluate(env)
        return
    got = prog.evaluate(env)
    assert got == pytest.approx(ref, rel=1e-12, abs=1e-300)
