import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ptobs.timescale import TimeScale


def test_mu_examples():
    ts = TimeScale(0.5, 0.1)
    assert ts.mu(0.0) == 1.0
    assert ts.mu(0.25) == 2.0
    assert ts.mu(0.49999999) == pytest.approx(5e7, rel=1e-6)
    assert ts.mu(0.5 - 1e-11) == 1e10
    assert ts.mu(0.5) == 1e10
    assert ts.mu(3.0) == 1e10


def test_cap_time():
    ts = TimeScale(0.5, 0.1)
    assert ts.cap_time == pytest.approx(0.5 - 5e-11, abs=1e-15)
    assert ts.saturated(ts.cap_time)
    assert not ts.saturated(math.nextafter(ts.cap_time, 0.0))


def test_mu_dot_over_mu():
    assert TimeScale(0.5, 0.1).mu_dot_over_mu(0.0) == 2.0
    assert TimeScale(1.0, 0.1).mu_dot_over_mu(0.5) == 2.0
    assert TimeScale(0.5, 0.1).mu_dot_over_mu(0.5) == 0.0


def test_gamma_examples():
    np.testing.assert_array_equal(TimeScale(0.5, 0.1).gamma_diag(0.0, 3), [1, 1, 1])
    # mu = 2 at t = T/2; m close to zero reproduces the m = 0 values
    g = TimeScale(1.0, 1e-300).gamma_diag(0.5, 2)
    np.testing.assert_allclose(g, [0.5, 0.25], rtol=1e-15)
    g = TimeScale(1.0, 0.1).gamma_diag(0.9, 1)
    assert g[0] == pytest.approx(0.079432823472428, rel=1e-12)


@pytest.mark.parametrize("kw", [dict(T=0, m=0.1), dict(T=1, m=0), dict(T=1, m=0.1, mu_cap=0.5)])
def test_invalid_parameters(kw):
    with pytest.raises(ValueError):
        TimeScale(**kw)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        TimeScale(1.0, 0.1).mu(-1.0)


@given(st.floats(0.01, 10), st.floats(0.01, 2), st.floats(0, 0.999), st.floats(0, 0.999))
def test_monotone_below_cap(T, m, a, b):
    ts = TimeScale(T, m)
    t1, t2 = sorted((a * T, b * T))
    assert ts.mu(t1) <= ts.mu(t2)
    if t2 - t1 > 1e-9 * T:
        assert ts.mu(t1) < ts.mu(t2)
    assert ts.mu(0.0) == 1.0


@given(st.floats(0.01, 10), st.floats(0.01, 2), st.floats(0, 0.9999), st.integers(1, 6))
def test_gamma_inverts_gain_scale(T, m, frac, n):
    ts = TimeScale(T, m)
    t = frac * T
    prod = ts.gamma_diag(t, n) * ts.gain_scale(t, n)
    np.testing.assert_allclose(prod, 1.0, rtol=1e-12)
    g = ts.gamma_diag(t, n)
    assert np.all((g > 0) & (g <= 1))
    if ts.mu(t) > 1 and n > 1:
        assert np.all(np.diff(g) < 0)
