"""Command line interface: ``ptobs run``, ``ptobs scenarios list``, ``ptobs plot``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .runner import gnuplot_script, run_scenario
from .scenario import ScenarioError, load_scenario, shipped_scenarios

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INTEGRATION = 3


def _cmd_run(args) -> int:
    try:
        scn = load_scenario(args.scenario)
        if args.seed is not None:
            scn = scn.with_seed(args.seed)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out) if args.out else Path("runs") / scn.name
    res = run_scenario(scn, out, check_only=args.check_only)
    for path in res.files:
        print(path)
    if res.failure is not None:
        print(f"error: {res.failure}", file=sys.stderr)
        return EXIT_INTEGRATION
    if res.comparison is not None:
        c = res.comparison
        print(f"peak ratio hg/pt = {c.peak_ratio:.6g}, steady ratio hg/pt = {c.steady_ratio:.6g}")
    return EXIT_OK


def _cmd_list(args) -> int:
    for name, desc in shipped_scenarios().items():
        print(f"{name}\t{desc}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    run_dir = Path(args.run_dir)
    try:
        text = gnuplot_script(run_dir)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    path = run_dir / "plot.gp"
    path.write_text(text, encoding="utf-8", newline="\n")
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptobs", description="Prescribed-time observer simulation and certification.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file or shipped scenario")
    r.add_argument("scenario", help="path to a scenario JSON file, or a shipped scenario name")
    r.add_argument("--out", help="output directory (default runs/<name>)")
    r.add_argument("--check-only", action="store_true", help="write the certificates only, no simulation")
    r.add_argument("--seed", type=int, help="override the scenario's noise seed")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("scenarios", help="shipped scenarios")
    ssub = s.add_subparsers(dest="action", required=True)
    ls = ssub.add_parser("list", help="list shipped scenarios")
    ls.set_defaults(func=_cmd_list)

    pl = sub.add_parser("plot", help="write a gnuplot script for a run directory")
    pl.add_argument("run_dir")
    pl.set_defaults(func=_cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
