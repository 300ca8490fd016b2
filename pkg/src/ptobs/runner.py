"""Run a scenario and write its artifacts to a directory."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .certify import certify, check_trajectory_bounds, companion
from .linalg import eigenvalues
from .metrics import compare, compute_metrics
from .model import state_names
from .observers import HIGH_GAIN
from .scenario import Scenario
from .sim import IntegrationError, Trajectory, simulate_many


def format_value(v) -> str:
    """Stable text form for report values."""
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        re_, im = repr(v.real), repr(abs(v.imag))
        return re_ if v.imag == 0 else f"{re_}{'-' if v.imag < 0 else '+'}{im}j"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    return str(v)


def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k in obj:
            _flatten(f"{prefix}.{k}" if prefix else k, obj[k], out)
    elif isinstance(obj, list) and obj and isinstance(obj[0], dict):
        for i, item in enumerate(obj):
            _flatten(f"{prefix}[{i}]", item, out)
    else:
        out.append((prefix, obj))


class Report:
    """Blocks of ``key = value`` lines."""

    def __init__(self):
        self.blocks: list[tuple[str, list]] = []

    def add(self, title: str, items):
        self.blocks.append((title, list(items)))

    def get(self, title: str) -> dict:
        for t, items in self.blocks:
            if t == title:
                return dict(items)
        raise KeyError(title)

    def text(self) -> str:
        lines = []
        for title, items in self.blocks:
            if lines:
                lines.append("")
            lines.append(f"[{title}]")
            lines += [f"{k} = {format_value(v)}" for k, v in items]
        return "\n".join(lines) + "\n"


def csv_header(traj: Trajectory) -> list[str]:
    n = traj.n
    k = traj.xhat.shape[1]
    cols = ["t"] + state_names(n) + [f"xhat{i}" for i in range(1, k + 1)] + ["err_norm", "mu"]
    if traj.dhat is not None:
        cols.append("d")
    return cols


def write_csv(traj: Trajectory, path: Path) -> None:
    cols = [traj.times[:, None], traj.x, traj.xhat, traj.err_norm[:, None], traj.mu_val[:, None]]
    if traj.dhat is not None:
        cols.append(traj.d[:, None])
    data = np.hstack(cols)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(csv_header(traj)) + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",", newline="\n")


def read_csv_header(path: Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.readline().strip().split(",")


def gnuplot_script(run_dir: Path) -> str:
    """Gnuplot commands for every trajectory CSV in ``run_dir``.

    One page per observer with a panel per state plus the error norm on a log
    scale; extended observers get a disturbance panel.
    """
    csvs = sorted(p for p in Path(run_dir).glob("*.csv"))
    if not csvs:
        raise FileNotFoundError(f"no trajectory CSVs in {run_dir}")
    lines = [
        "# gnuplot script; run with: gnuplot plot.gp",
        "set datafile separator ','",
        "set terminal pngcairo size 900,900",
        "set key autotitle columnhead",
        "set grid",
        "set xlabel 't'",
    ]
    for p in csvs:
        cols = read_csv_header(p)
        idx = {c: i + 1 for i, c in enumerate(cols)}
        states = [c for c in cols if c.startswith("x") and not c.startswith("xhat")]
        name = p.stem
        has_d = "d" in idx
        panels = len(states) + 1 + (1 if has_d else 0)
        lines += ["", f"set output '{name}.png'", f"set multiplot layout {panels},1 title '{name}'"]
        for s in states:
            i = s[1:]
            lines += [
                "unset logscale y",
                f"set ylabel '{s}'",
                f"plot '{p.name}' using 1:{idx[s]} with lines title '{s}', \\",
                f"     '' using 1:{idx['xhat' + i]} with lines dt 2 title 'xhat{i}'",
            ]
        lines += [
            "set logscale y",
            "set ylabel '|e|'",
            f"plot '{p.name}' using 1:(${idx['err_norm']} > 0 ? ${idx['err_norm']} : 1/0) "
            "with lines title 'err_norm'",
            "unset logscale y",
        ]
        if has_d:
            dh = f"xhat{len(states) + 1}"
            lines += [
                "set ylabel 'd'",
                f"plot '{p.name}' using 1:{idx['d']} with lines title 'd', \\",
                f"     '' using 1:{idx[dh]} with lines dt 2 title 'dhat'",
            ]
        lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


@dataclass
class RunResult:
    report: Report
    certificates: dict = field(default_factory=dict)
    trajectories: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    comparison: object = None
    failure: IntegrationError | None = None
    files: list = field(default_factory=list)


def _hg_items(spec):
    ev = eigenvalues(companion(spec.alpha))
    return [
        ("alpha", list(spec.alpha)),
        ("epsilon", spec.epsilon),
        ("gain_power", spec.gain_power),
        ("gains", spec.gains().tolist()),
        ("eigvals", [complex(v) for v in ev]),
        ("hurwitz", bool(np.max(ev.real) < -1e-12)),
    ]


def run_scenario(scn: Scenario, out_dir=None, check_only: bool = False) -> RunResult:
    """Certify, simulate, measure and (if ``out_dir`` is given) write artifacts."""
    report = Report()
    config = []
    _flatten("", {k: v for k, v in scn.raw.items() if k != "description"}, config)
    report.add("config", config)
    res = RunResult(report)

    copts = scn.certify_opts
    for ob in scn.observers:
        if ob.spec.variant == HIGH_GAIN:
            report.add(f"certificate.{ob.name}", _hg_items(ob.spec))
            continue
        cert = certify(ob.spec.L, ob.spec.ts, copts["gamma_bar_f"], copts["sigma_bar"])
        res.certificates[ob.name] = cert
        if copts["enabled"] or check_only:
            report.add(f"certificate.{ob.name}", cert.as_items())

    if not check_only:
        _simulate(scn, res)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        oopts = scn.output_opts
        for name, traj in res.trajectories.items():
            path = out / oopts["csv_path"].format(observer=name, scenario=scn.name)
            write_csv(traj, path)
            res.files.append(path)
        rpath = out / oopts["report_path"]
        with open(rpath, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.text())
        res.files.append(rpath)
        if res.trajectories and oopts["plot_script"]:
            ppath = out / oopts["plot_script"]
            with open(ppath, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(gnuplot_script(out))
            res.files.append(ppath)
    return res


def _simulate(scn: Scenario, res: RunResult) -> None:
    report = res.report
    mopts = scn.metrics_opts
    T_ref = scn.reference_T()
    # make the convergence probes exact grid points
    probes = []
    for ob in scn.observers:
        ts = getattr(ob.spec, "ts", None)
        if ts is not None:
            delta = mopts["delta"] if mopts["delta"] is not None else 1e-3 * ts.T
            probes.append(ts.T - delta)
    cfg = dataclasses.replace(scn.sim, sample_times=tuple(sorted(set(probes))))
    try:
        trajs = simulate_many(
            scn.system,
            [ob.spec for ob in scn.observers],
            scn.x0,
            [ob.xhat0 for ob in scn.observers],
            cfg,
            names=[ob.name for ob in scn.observers],
        )
    except IntegrationError as exc:
        res.failure = exc
        report.add("failure", [("error", str(exc)), ("t_last", exc.t_last)])
        return
    for ob, traj in zip(scn.observers, trajs):
        res.trajectories[ob.name] = traj
        ts = getattr(ob.spec, "ts", None)
        ref = ts if ts is not None else T_ref
        dw = tuple(mopts["dhat_window"]) if mopts["dhat_window"] is not None else None
        m = compute_metrics(traj, ref, delta=mopts["delta"], dhat_window=dw,
                            settle_tol=mopts["settle_tol"])
        res.metrics[ob.name] = m
        cert = res.certificates.get(ob.name)
        if cert is not None and scn.certify_opts["enabled"] and cert.P is not None:
            if np.any(traj.times <= cert.t1_star):
                rep = check_trajectory_bounds(traj, cert)
                report.add(f"bounds.{ob.name}", rep.as_items())
        report.add(f"metrics.{ob.name}", [("rows", len(traj))] + m.as_items())

    pts = [ob.name for ob in scn.observers if ob.spec.variant != HIGH_GAIN]
    hgs = [ob.name for ob in scn.observers if ob.spec.variant == HIGH_GAIN]
    if pts and hgs:
        a, b = res.metrics[pts[0]], res.metrics[hgs[0]]
        if a.post_T_max_err is not None and b.post_T_max_err is not None:
            res.comparison = compare(a, b)
            report.add("comparison", [("pt", pts[0]), ("hg", hgs[0])] + res.comparison.as_items())
