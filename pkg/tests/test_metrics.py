import math

import numpy as np
import pytest

from ptobs.metrics import MetricsError, RunMetrics, compare, compute_metrics
from ptobs.model import example1_system
from ptobs.observers import HgObserver
from ptobs.sim import SimConfig, Trajectory, simulate
from ptobs.timescale import TimeScale


def _traj(times, err, system_id="s", dhat=None, d=None):
    times = np.asarray(times, float)
    err = np.asarray(err, float)
    x = np.column_stack([err, np.zeros_like(err)])
    xhat = np.zeros_like(x)
    k = len(times)
    if dhat is not None:
        xhat = np.column_stack([xhat, dhat])
    return Trajectory(times, x, xhat, err, np.ones(k), np.zeros(k) if d is None else np.asarray(d, float),
                      None if dhat is None else np.asarray(dhat, float), "obs", "v", system_id)


def _metrics(peak, post, system_id="s"):
    return RunMetrics("o", system_id, 0.5, peak, 0.0, 0.0, 0.4995, post, None, True)


def test_zero_error_trajectory():
    t = np.linspace(0, 1, 101)
    m = compute_metrics(_traj(t, np.zeros_like(t)), TimeScale(0.5, 0.1))
    assert (m.peak_err, m.err_at_T_minus, m.post_T_max_err) == (0.0, 0.0, 0.0)
    assert m.settled


def test_peak_is_argmax():
    m = compute_metrics(_traj([0, 0.1, 0.5], [1, 5, 0.1]), None)
    assert (m.peak_err, m.peak_time) == (5.0, 0.1)
    assert math.isnan(m.err_at_T_minus) and m.post_T_max_err is None


def test_probe_interpolates_between_samples():
    m = compute_metrics(_traj([0, 0.4, 0.5, 0.6], [1.0, 0.5, 0.0, 0.0]), 0.5, delta=0.05)
    assert m.t_probe == 0.45
    assert m.err_at_T_minus == pytest.approx(0.25)
    assert m.peak_err >= m.err_at_T_minus >= 0


def test_dhat_window():
    t = np.linspace(0, 4, 401)
    d = np.sin(t)
    dhat = d + np.where(t < 2, 1.0, 0.01)
    m = compute_metrics(_traj(t, np.zeros_like(t), dhat=dhat, d=d), TimeScale(1.0, 0.1))
    assert m.dhat_track_err == pytest.approx(0.01)
    m = compute_metrics(_traj(t, np.zeros_like(t), dhat=dhat, d=d), TimeScale(1.0, 0.1), dhat_window=(0, 4))
    assert m.dhat_track_err == pytest.approx(1.0)


def test_empty_windows_are_errors():
    with pytest.raises(MetricsError):
        compute_metrics(_traj([0, 0.1], [1, 1]), 0.5)
    t = np.linspace(0, 1, 11)
    with pytest.raises(MetricsError):
        compute_metrics(_traj(t, np.zeros_like(t), dhat=np.zeros_like(t)), 0.5)


def test_settled_flag():
    t = np.linspace(0, 1, 11)
    assert not compute_metrics(_traj(t, np.full_like(t, 0.1)), 0.5).settled
    assert compute_metrics(_traj(t, np.full_like(t, 0.1)), 0.5, settle_tol=0.2).settled


def test_compare_examples():
    c = compare(_metrics(1.0, 0.1), _metrics(1.0, 0.1))
    assert (c.peak_ratio, c.steady_ratio) == (1.0, 1.0)
    assert c.verdicts == (False, False)
    c = compare(_metrics(2.0, 0.1), _metrics(20.0, 0.2))
    assert c.peak_ratio == 10.0 and c.steady_ratio == 2.0
    assert c.verdicts == (True, True)
    c = compare(_metrics(0.0, 0.0), _metrics(0.0, 0.0))
    assert (c.peak_ratio, c.steady_ratio) == (1.0, 1.0)


def test_compare_needs_same_plant():
    with pytest.raises(MetricsError):
        compare(_metrics(1, 1, "a"), _metrics(1, 1, "b"))


def test_compare_antisymmetric(rng):
    for _ in range(100):
        a = _metrics(*rng.uniform(0, 2, 2))
        b = _metrics(*rng.uniform(0, 2, 2))
        ab, ba = compare(a, b), compare(b, a)
        assert ab.pt_lower_peak == ba.pt_lower_peak is False or ab.pt_lower_peak != ba.pt_lower_peak
        assert ab.pt_lower_peak == (not ba.pt_lower_peak) or a.peak_err == b.peak_err
        assert ab.pt_lower_steady == (not ba.pt_lower_steady) or a.post_T_max_err == b.post_T_max_err


def test_stride_refinement_changes_peak_little():
    sys = example1_system()
    obs = HgObserver((3, 2), 0.01)
    fine = simulate(sys, obs, [1, -1], [0, 0], SimConfig(t_end=0.6, record_stride=5))
    finer = simulate(sys, obs, [1, -1], [0, 0], SimConfig(t_end=0.6, record_stride=10))
    a = compute_metrics(fine, 0.5).peak_err
    b = compute_metrics(finer, 0.5).peak_err
    assert abs(a - b) < 0.01 * a


def test_example1_comparison(ex1_run):
    from ptobs.timescale import TimeScale as TS

    pt, hg = ex1_run
    mp = compute_metrics(pt, TS(0.5, 0.1))
    mh = compute_metrics(hg, 0.5)
    c = compare(mp, mh)
    assert c.verdicts == (True, True)
    assert c.peak_ratio == pytest.approx(35.83, rel=1e-3)
