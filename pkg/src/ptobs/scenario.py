"""Scenario files: JSON descriptions of a plant, its observers and a run."""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .expr import ExprError
from .model import ModelError, TriangularSystem
from .observers import EXTENDED_PT, HIGH_GAIN, ExtendedPtObserver, HgObserver, PtObserver
from .sim import SimConfig
from .timescale import DEFAULT_MU_CAP, TimeScale

DEFAULTS = {
    "sim": {
        "dt_base": 1e-4,
        "dt_min": None,
        "singularity_shrink": True,
        "record_stride": None,
        "noise_std": 0.0,
        "seed": 0,
    },
    "certify": {"enabled": True, "gamma_bar_f": 0.0, "sigma_bar": 0.0},
    "metrics": {"delta": None, "dhat_window": None, "settle_tol": 1e-3},
    "output": {"csv_path": "{observer}.csv", "report_path": "report.txt", "plot_script": "plot.gp"},
}


class ScenarioError(ValueError):
    """Invalid scenario; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def _schema():
    text = resources.files("ptobs").joinpath("data/scenario.schema.json").read_text("utf-8")
    return json.loads(text)


def shipped_scenarios() -> dict[str, str]:
    """Names of the bundled scenarios mapped to their descriptions."""
    out = {}
    root = resources.files("ptobs").joinpath("data/scenarios")
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            raw = json.loads(entry.read_text("utf-8"))
            out[entry.name[:-5]] = raw.get("description", "")
    return out


def resolve_path(name_or_path: str) -> str:
    """Return the JSON text for a file path or a shipped scenario name."""
    p = Path(name_or_path)
    if p.is_file():
        return p.read_text("utf-8")
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    entry = resources.files("ptobs").joinpath(f"data/scenarios/{stem}.json")
    if entry.is_file():
        return entry.read_text("utf-8")
    raise ScenarioError(f"no such scenario file or shipped scenario: {name_or_path}")


@dataclass(frozen=True)
class ObserverEntry:
    name: str
    spec: object
    xhat0: tuple


@dataclass(frozen=True)
class Scenario:
    name: str
    raw: dict  # the resolved document, defaults filled in
    system: TriangularSystem
    observers: tuple
    x0: tuple
    sim: SimConfig

    @property
    def certify_opts(self) -> dict:
        return self.raw["certify"]

    @property
    def metrics_opts(self) -> dict:
        return self.raw["metrics"]

    @property
    def output_opts(self) -> dict:
        return self.raw["output"]

    def reference_T(self):
        """Prescribed time of the first timed observer, used to probe untimed ones."""
        for ob in self.observers:
            ts = getattr(ob.spec, "ts", None)
            if ts is not None:
                return ts.T
        return None

    def with_seed(self, seed: int) -> "Scenario":
        raw = copy.deepcopy(self.raw)
        for section in DEFAULTS:
            raw[section] = {
                k: v for k, v in raw[section].items() if v is not None or k == "plot_script"
            }
        raw["sim"]["seed"] = int(seed)
        return build_scenario(raw)


def _json_path(err) -> str:
    parts = []
    for p in err.absolute_path:
        parts.append(f"[{p}]" if isinstance(p, int) else (f".{p}" if parts else str(p)))
    return "".join(parts) or "<root>"


def _fill_defaults(doc: dict) -> dict:
    doc = copy.deepcopy(doc)
    for section, values in DEFAULTS.items():
        merged = dict(values)
        merged.update(doc.get(section, {}))
        doc[section] = merged
    for ob in doc["observers"]:
        if ob["variant"] == HIGH_GAIN:
            ob.setdefault("hg_gain_power", "standard")
        else:
            ob.setdefault("mu_cap", DEFAULT_MU_CAP)
    return doc


def _build_observer(ob: dict, n: int, path: str):
    variant = ob["variant"]
    try:
        if variant == HIGH_GAIN:
            spec = HgObserver(tuple(ob["alpha"]), ob["epsilon"], ob["hg_gain_power"])
            key = "alpha"
        else:
            ts = TimeScale(ob["T"], ob["m"], ob["mu_cap"])
            cls = ExtendedPtObserver if variant == EXTENDED_PT else PtObserver
            spec = cls(tuple(ob["L"]), ts)
            key = "L"
    except ValueError as exc:
        raise ScenarioError(str(exc), path) from None
    want = spec.dim(n)
    if len(spec.gain_coeffs) != want:
        raise ScenarioError(f"{variant} observer needs {want} gains for n={n}", f"{path}.{key}")
    return spec


def build_scenario(doc: dict) -> Scenario:
    """Validate a parsed scenario document and build the runtime objects."""
    errors = list(jsonschema.Draft202012Validator(_schema()).iter_errors(doc))
    if errors:
        # the deepest path is the most specific complaint
        exc = max(errors, key=lambda e: len(e.absolute_path))
        raise ScenarioError(exc.message, _json_path(exc))
    doc = _fill_defaults(doc)
    s = doc["system"]
    n = s["n"]
    if len(s["f"]) != n:
        raise ScenarioError(f"expected {n} expressions for n={n}, got {len(s['f'])}", "system.f")
    try:
        system = TriangularSystem(n, tuple(s["f"]), s["f0"], s["u"], s["d"])
    except ExprError as exc:
        where = "system"
        for i, text in enumerate(s["f"]):
            if getattr(exc, "source", None) == text:
                where = f"system.f[{i}]"
        for key in ("f0", "u", "d"):
            if getattr(exc, "source", None) == s[key]:
                where = f"system.{key}"
        raise ScenarioError(str(exc), where) from None
    except ModelError as exc:
        where = "system"
        m = re.match(r"f(\d+) may only use", str(exc))
        if m:
            where = f"system.f[{int(m.group(1)) - 1}]"
        raise ScenarioError(str(exc), where) from None

    init = doc["initial"]
    if len(init["x0"]) != n:
        raise ScenarioError(f"x0 must have length {n}", "initial.x0")
    if len(init["xhat0"]) != n:
        raise ScenarioError(f"xhat0 must have length {n}", "initial.xhat0")

    names = [ob["name"] for ob in doc["observers"]]
    if len(set(names)) != len(names):
        raise ScenarioError("observer names must be unique", "observers")
    entries = []
    for i, ob in enumerate(doc["observers"]):
        path = f"observers[{i}]"
        spec = _build_observer(ob, n, path)
        k = spec.dim(n)
        if "xhat0" in ob:
            xh = list(ob["xhat0"])
        else:
            # extended observers start from a zero disturbance estimate
            xh = list(init["xhat0"]) + [0.0] * (k - n)
        if len(xh) != k:
            raise ScenarioError(f"xhat0 must have length {k}", f"{path}.xhat0")
        entries.append(ObserverEntry(ob["name"], spec, tuple(float(v) for v in xh)))

    sim = doc["sim"]
    try:
        cfg = SimConfig(
            t_end=sim["t_end"],
            dt_base=sim["dt_base"],
            dt_min=sim["dt_min"],
            singularity_shrink=sim["singularity_shrink"],
            record_stride=sim["record_stride"],
            noise_std=sim["noise_std"],
            seed=sim["seed"],
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), "sim") from None

    mw = doc["metrics"]["dhat_window"]
    if mw is not None and not mw[0] < mw[1]:
        raise ScenarioError("window must be increasing", "metrics.dhat_window")

    return Scenario(doc["name"], doc, system, tuple(entries),
                    tuple(float(v) for v in init["x0"]), cfg)


def load_scenario(path_or_name: str) -> Scenario:
    """Load a scenario from a JSON file, or a shipped scenario by name."""
    text = resolve_path(str(path_or_name))
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from None
    return build_scenario(doc)
