import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptobs.expr import BinOp, Call, DomainError, Num, UnknownVariableError, Var, format_expr
from ptobs.model import (
    DimensionError,
    ModelError,
    TriangularityError,
    TriangularSystem,
    example1_system,
    system_rhs,
)


def test_example1_rhs_at_origin():
    sys = example1_system()
    assert system_rhs(sys, [0.0, 0.0], 0.0).tolist() == [0.0, 0.0]


def test_example1_first_stage_vanishes_at_quarter_turn():
    sys = example1_system()
    assert system_rhs(sys, [math.pi / 2, 1.0], 0.0)[0] == pytest.approx(0.0, abs=1e-15)


def test_integrator_of_constant_disturbance():
    sys = TriangularSystem(1, ("0",), "0", "0", "1")
    for x in (-3.0, 0.0, 7.5):
        assert system_rhs(sys, [x], 2.0).tolist() == [1.0]


def closed_form_example1(x, t):
    x1, x2 = x
    u = math.sin(0.35 * t)
    d = 5 * math.sin(2 * t)
    return [x2 - math.sin(x1), -x1 - 0.02 * x2 ** 3 + u + d]


def test_example1_matches_hand_coded_rhs(rng):
    sys = example1_system()
    for _ in range(100):
        x = rng.uniform(-5, 5, 2)
        t = rng.uniform(0, 10)
        got = system_rhs(sys, x, t)
        want = closed_form_example1(x, t)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)


def test_triangularity_rejected_with_index():
    with pytest.raises(TriangularityError, match="f1 .*x2"):
        TriangularSystem(2, ("x2", "0"), "0", "0", "0")


def test_signals_may_only_use_t():
    # as text the parser rejects the name; as an AST the model check does
    with pytest.raises(UnknownVariableError):
        TriangularSystem(1, ("0",), "0", "x1", "0")
    with pytest.raises(ModelError, match="d\\(t\\)"):
        TriangularSystem(1, ("0",), "0", "0", Var("u"))


def test_f0_may_use_all_states():
    sys = TriangularSystem(2, ("0", "0"), "x1*x2 + u", "1", "0")
    assert system_rhs(sys, [2.0, 3.0], 0.0).tolist() == [3.0, 0.0]


def test_dimension_checks():
    sys = example1_system()
    with pytest.raises(DimensionError):
        system_rhs(sys, [1.0], 0.0)
    with pytest.raises(ModelError):
        system_rhs(sys, [1.0, float("nan")], 0.0)
    with pytest.raises(DimensionError):
        TriangularSystem(2, ("0",), "0", "0", "0")


def test_domain_errors_propagate():
    sys = TriangularSystem(1, ("log(x1)",), "0", "0", "0")
    with pytest.raises(DomainError):
        system_rhs(sys, [-1.0], 0.0)


def test_system_is_immutable_and_fingerprinted():
    a, b = example1_system(), example1_system()
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != example1_system(d="50*sin(2*t)").fingerprint()
    with pytest.raises(Exception):
        a.n = 3


@st.composite
def stage_expr(draw, n):
    """Random expression over x1..xn and u, plus the largest state index used."""
    k = draw(st.integers(1, n))
    other = draw(st.integers(1, n))
    leaves = [Var(f"x{k}"), Var(f"x{other}"), Var("u"), Num(draw(st.floats(0, 5)))]
    e = leaves[0]
    for leaf in leaves[1:]:
        op = draw(st.sampled_from("+-*"))
        e = BinOp(op, e, leaf) if draw(st.booleans()) else BinOp(op, leaf, Call("sin", e))
    return e, max(k, other)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n), stage_expr(n))))
def test_triangularity_property(case):
    n, i, (e, top) = case
    f = ["0"] * n
    f[i - 1] = format_expr(e)
    if top > i:
        with pytest.raises(TriangularityError):
            TriangularSystem(n, tuple(f), "0", "0", "0")
    else:
        TriangularSystem(n, tuple(f), "0", "0", "0")
