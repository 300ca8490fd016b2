import numpy as np
import pytest

from ptobs.model import DimensionError, TriangularSystem, example1_system, system_rhs
from ptobs.observers import (
    ExtendedPtObserver,
    HgObserver,
    PtObserver,
    error_dynamics,
    extended_pt_observer_rhs,
    hg_observer_rhs,
    joint_rhs,
    pt_observer_rhs,
)
from ptobs.timescale import TimeScale

SYS = example1_system()
PT = PtObserver((3, 2), TimeScale(0.5, 0.1))
EXT = ExtendedPtObserver((6, 11, 6), TimeScale(1.0, 0.1))


def test_pt_rhs_examples():
    assert pt_observer_rhs(SYS, PT, [0, 0], 0.0, 0.0).tolist() == [0.0, 0.0]
    assert pt_observer_rhs(SYS, PT, [0, 0], 1.0, 0.0).tolist() == [3.0, 2.0]
    r = pt_observer_rhs(SYS, PT, [0, 0], 1.0, 0.25)
    # mu = 2: gains 3 * 2^1.1 and 2 * 2^2.2
    np.testing.assert_allclose(r, [6.4306407752, 9.1895868400], rtol=1e-9)
    np.testing.assert_allclose(r, [3 * np.exp(1.1 * np.log(2)), 2 * np.exp(2.2 * np.log(2))], rtol=1e-14)


def test_hg_rhs_examples():
    hg = HgObserver((3, 2), 0.01)
    assert hg_observer_rhs(SYS, hg, [0, 0], 0.0, 0.0).tolist() == [0.0, 0.0]
    np.testing.assert_allclose(hg_observer_rhs(SYS, hg, [0, 0], 1.0, 0.0), [300.0, 20000.0], rtol=1e-14)
    one = HgObserver((3, 2), 1.0)
    assert hg_observer_rhs(SYS, one, [0, 0], 1.0, 0.0).tolist() == [3.0, 2.0]


def test_hg_linear_power_switch():
    hg = HgObserver((3, 2), 0.01, "linear")
    np.testing.assert_allclose(hg.gains(), [300.0, 200.0])
    with pytest.raises(ValueError):
        HgObserver((3, 2), 0.01, "quadratic")
    with pytest.raises(ValueError):
        HgObserver((3, 2), 0.0)


def test_extended_rhs_examples():
    assert extended_pt_observer_rhs(SYS, EXT, [0, 0, 0], 0.0, 0.0).tolist() == [0.0, 0.0, 0.0]
    assert extended_pt_observer_rhs(SYS, EXT, [0, 0, 0], 1.0, 0.0).tolist() == [6.0, 11.0, 6.0]
    np.testing.assert_allclose(extended_pt_observer_rhs(SYS, EXT, [0, 1, 0], 0.0, 0.0), [1.0, -0.02, 0.0],
                               rtol=1e-15)


def test_extended_stage_n_uses_full_model_plus_dhat():
    r = extended_pt_observer_rhs(SYS, EXT, [0.3, 0.2, 1.5], 0.3, 2.0)
    u = np.sin(0.7)
    assert r[1] == pytest.approx(-0.3 - 0.02 * 0.2 ** 3 + u + 1.5, rel=1e-14)
    assert r[2] == 0.0


def test_gain_schedule_matches_timescale(rng):
    ts = PT.ts
    for t in rng.uniform(0, ts.cap_time, 50):
        mu = ts.mu(t)
        want = [3 * mu ** 1.1, 2 * mu ** 2.2]
        np.testing.assert_allclose(PT.gains(t), want, rtol=1e-12)


def test_injection_vanishes_when_output_matches(rng):
    open_loop = PtObserver((0, 0), PT.ts)
    for _ in range(20):
        xh = rng.normal(size=2)
        t = rng.uniform(0, 0.49)
        a = pt_observer_rhs(SYS, PT, xh, xh[0], t)
        b = pt_observer_rhs(SYS, open_loop, xh, xh[0], t)
        np.testing.assert_array_equal(a, b)
        hg = hg_observer_rhs(SYS, HgObserver((3, 2), 0.01), xh, xh[0], t)
        np.testing.assert_array_equal(hg, b)


def test_joint_rhs_zero_error_with_exact_model():
    sys = TriangularSystem(2, ("-sin(x1)", "-x1 + u"), "-x1 + u", "sin(t)", "0")
    x = np.array([0.4, -0.7])
    d = joint_rhs(sys, PT, np.concatenate([x, x]), 0.3)
    np.testing.assert_array_equal(d[:2], d[2:])


def test_joint_rhs_example1_at_origin():
    d = joint_rhs(SYS, PT, [0, 0, 0, 0], 0.0)
    assert d.tolist() == [0.0, 0.0, 0.0, 0.0]


def test_joint_rhs_dimension_mismatch():
    with pytest.raises(DimensionError):
        joint_rhs(SYS, EXT, [0, 0, 0, 0], 0.0)
    with pytest.raises(DimensionError):
        joint_rhs(SYS, PtObserver((1, 2, 3), PT.ts), [0] * 5, 0.0)


def test_error_dynamics_equivalence(rng):
    for _ in range(100):
        x = rng.uniform(-3, 3, 2)
        xh = rng.uniform(-3, 3, 2)
        t = rng.uniform(0, 0.5 * (1 - 1e-6))
        d = joint_rhs(SYS, PT, np.concatenate([x, xh]), t)
        edot = d[:2] - d[2:]
        want = error_dynamics(SYS, PT, x, xh, t)
        np.testing.assert_allclose(edot, want, rtol=1e-10, atol=1e-12 * np.abs(want).max())


def test_plant_part_of_joint_matches_system_rhs(rng):
    x = rng.normal(size=2)
    np.testing.assert_array_equal(joint_rhs(SYS, PT, np.r_[x, 0, 0], 1.3)[:2], system_rhs(SYS, x, 1.3))
