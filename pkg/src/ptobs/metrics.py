"""Performance summaries of simulated trajectories and PT-vs-HG comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .timescale import TimeScale

SETTLE_TOL = 1e-3


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class RunMetrics:
    observer: str
    system_id: str
    T_ref: float
    peak_err: float
    peak_time: float
    err_at_T_minus: float
    t_probe: float
    post_T_max_err: float | None
    dhat_track_err: float | None
    settled: bool

    def as_items(self):
        return [
            ("peak_err", self.peak_err),
            ("peak_time", self.peak_time),
            ("T_ref", self.T_ref),
            ("t_probe", self.t_probe),
            ("err_at_T_minus", self.err_at_T_minus),
            ("post_T_max_err", self.post_T_max_err),
            ("dhat_track_err", self.dhat_track_err),
            ("settled", self.settled),
        ]


def _value_at(times, values, t):
    # linear interpolation; exact when t is a recorded sample
    i = int(np.searchsorted(times, t))
    if i < len(times) and times[i] == t:
        return float(values[i])
    if i == 0 or i == len(times):
        raise MetricsError(f"t={t!r} is outside the recorded range")
    t0, t1 = times[i - 1], times[i]
    w = (t - t0) / (t1 - t0)
    return float((1 - w) * values[i - 1] + w * values[i])


def compute_metrics(traj, ts: TimeScale | float | None = None, delta: float | None = None,
                    dhat_window: tuple | None = None, settle_tol: float = SETTLE_TOL,
                    tail: float | None = None) -> RunMetrics:
    """Summarise one trajectory.

    ``ts`` gives the reference prescribed time; a plain float is accepted for
    observers that have none (high-gain runs are probed at the comparison
    scenario's T). ``delta`` defaults to ``1e-3 * T``. ``settled`` means the
    error stays below ``settle_tol`` over the last ``tail`` seconds
    (default: everything after T, or the last 10% without a T).
    """
    times = np.asarray(traj.times)
    err = np.asarray(traj.err_norm)
    if len(times) == 0:
        raise MetricsError("empty trajectory")
    T = ts.T if isinstance(ts, TimeScale) else ts
    t_end = float(times[-1])

    i = int(np.argmax(err))
    peak, peak_t = float(err[i]), float(times[i])

    if T is None:
        probe, at_probe, post = math.nan, math.nan, None
    else:
        if not 0 < T <= t_end:
            raise MetricsError(f"T={T!r} is outside the recorded range [0, {t_end!r}]")
        delta = 1e-3 * T if delta is None else delta
        probe = T - delta
        at_probe = _value_at(times, err, probe)
        post = None
        if T < t_end:
            w = times >= T
            post = float(err[w].max())

    dtrack = None
    if traj.dhat is not None:
        lo, hi = dhat_window if dhat_window is not None else (max(2 * (T or 0.0), 2.0), t_end)
        w = (times >= lo) & (times <= hi)
        if not np.any(w):
            raise MetricsError(f"no samples in the disturbance window [{lo!r}, {hi!r}]")
        dtrack = float(np.max(np.abs(traj.dhat[w] - traj.d[w])))

    if tail is None:
        start = T if T is not None and T < t_end else times[0] + 0.9 * (t_end - times[0])
    else:
        start = t_end - tail
    w = times >= start
    if not np.any(w):
        raise MetricsError("no samples in the settling window")
    settled = bool(err[w].max() <= settle_tol)

    return RunMetrics(
        observer=traj.observer,
        system_id=traj.system_id,
        T_ref=math.nan if T is None else float(T),
        peak_err=peak,
        peak_time=peak_t,
        err_at_T_minus=at_probe,
        t_probe=probe,
        post_T_max_err=post,
        dhat_track_err=dtrack,
        settled=settled,
    )


def _ratio(num, den):
    if num == 0 and den == 0:
        return 1.0
    if den == 0:
        return math.inf
    return num / den


@dataclass(frozen=True)
class Comparison:
    peak_ratio: float  # hg / pt
    steady_ratio: float  # hg / pt on [T, t_end]
    pt_lower_peak: bool
    pt_lower_steady: bool

    @property
    def verdicts(self):
        return (self.pt_lower_peak, self.pt_lower_steady)

    def as_items(self):
        return [
            ("peak_ratio_hg_over_pt", self.peak_ratio),
            ("steady_ratio_hg_over_pt", self.steady_ratio),
            ("pt_peak_lower", self.pt_lower_peak),
            ("pt_steady_lower", self.pt_lower_steady),
        ]


def compare(pt: RunMetrics, hg: RunMetrics) -> Comparison:
    if pt.system_id != hg.system_id:
        raise MetricsError("runs were made on different plants and cannot be compared")
    if pt.post_T_max_err is None or hg.post_T_max_err is None:
        raise MetricsError("both runs must extend past T to compare steady-state error")
    return Comparison(
        peak_ratio=_ratio(hg.peak_err, pt.peak_err),
        steady_ratio=_ratio(hg.post_T_max_err, pt.post_T_max_err),
        pt_lower_peak=pt.peak_err < hg.peak_err,
        pt_lower_steady=pt.post_T_max_err < hg.post_T_max_err,
    )
