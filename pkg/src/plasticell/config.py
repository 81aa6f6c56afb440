"""Scenario configuration: JSON schema, strict loading, round-trip dumping.

A scenario file is a single JSON object with a required ``schema_version``
and optional blocks; unknown keys anywhere are rejected with
field-addressed diagnostics so typos cannot silently change a run.

    {
      "schema_version": 1,
      "model": {
        "factories": [{"growth": 1.0, "growth_inhibition": 1.0,
                       "production": 1.5, "production_inhibition": 1.0}],
        "opposition": [[0.0]]
      },
      "stimulus": {"segments": [[[0.0, 0.5]]], "horizon": 50.0},
      "initial": {"factory": [0.5], "product": [0.5]},
      "experiment": {"name": "simulate", "params": {}},
      "integrator": {"step": 0.01, "output_stride": 10,
                     "steady_tol": 1e-8, "max_time": 1000.0},
      "output": {"dir": "out", "formats": ["csv"], "svg": false}
    }

``initial`` may instead be {"random": {"low": 0.1, "high": 2.0}}, which
draws a state uniformly per component using the CLI seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import IntegratorConfig
from .errors import ConfigError, ModelInputError
from .model import CellSpec, CellState, FactoryParams, StimulusProfile

SCHEMA_VERSION = 1

_FACTORY_KEYS = {"growth", "growth_inhibition", "production", "production_inhibition"}

EXPERIMENT_PARAM_KEYS: dict[str, set[str]] = {
    "simulate": set(),
    "equilibrium": {"consumption"},
    "nullclines": {"consumption", "samples"},
    "phase-portrait": {"consumption", "f_max", "p_max", "resolution"},
    "tau-heatmap": {
        "p_inf_range", "p_lim_range", "resolution",
        "f_min_baseline", "f_min_step", "max_time",
    },
    "pulse-demo": {
        "c_base", "pulse_height", "short_span", "long_span",
        "short_start", "long_start", "tail",
    },
    "opposition-surface": {"c_range", "resolution"},
    "capacity-map": {"opposition_rate", "c_range", "resolution", "contour_totcon"},
    "servo-demo": {
        "inertia", "damping", "reference_angle", "perturbation",
        "duration", "initial_gain", "initial_angle",
    },
    "validate": {"tau_check", "f_min_baseline", "f_min_step"},
}


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv",)
    svg: bool = False


@dataclass(frozen=True)
class RandomInitial:
    low: float
    high: float

    def draw(self, n: int, rng: np.random.Generator) -> CellState:
        return CellState(rng.uniform(self.low, self.high, n), rng.uniform(self.low, self.high, n))


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: model plus optional stimulus/initial/experiment blocks."""

    spec: CellSpec
    stimulus: StimulusProfile | None
    initial: CellState | RandomInitial | None
    experiment_name: str | None
    experiment_params: dict = field(default_factory=dict)
    integrator: IntegratorConfig = IntegratorConfig()
    output: OutputConfig = OutputConfig()


class _Walker:
    """Collects field-addressed issues while walking the raw JSON tree."""

    def __init__(self):
        self.issues: list[str] = []

    def fail(self, path: str, message: str):
        self.issues.append(f"{path}: {message}")

    def check_keys(self, obj: dict, allowed: set[str], required: set[str], path: str) -> bool:
        ok = True
        for key in obj:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else key, "unknown key")
                ok = False
        for key in required:
            if key not in obj:
                self.fail(f"{path}.{key}" if path else key, "missing required key")
                ok = False
        return ok

    def number(self, value, path: str, *, positive=False, nonnegative=False):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            self.fail(path, f"expected a number, got {type(value).__name__}")
            return None
        v = float(value)
        if positive and not v > 0:
            self.fail(path, f"must be > 0, got {v!r}")
            return None
        if nonnegative and v < 0:
            self.fail(path, f"must be >= 0, got {v!r}")
            return None
        return v


def _parse_model(w: _Walker, raw: dict) -> CellSpec | None:
    if not isinstance(raw, dict):
        w.fail("model", "expected an object")
        return None
    if not w.check_keys(raw, {"factories", "opposition"}, {"factories"}, "model"):
        return None
    raw_factories = raw["factories"]
    if not isinstance(raw_factories, list) or not raw_factories:
        w.fail("model.factories", "expected a non-empty list")
        return None
    factories = []
    for idx, fr in enumerate(raw_factories):
        path = f"model.factories[{idx}]"
        if not isinstance(fr, dict) or not w.check_keys(fr, _FACTORY_KEYS, _FACTORY_KEYS, path):
            return None
        vals = {key: w.number(fr[key], f"{path}.{key}", positive=True) for key in _FACTORY_KEYS}
        if any(v is None for v in vals.values()):
            return None
        factories.append(FactoryParams(**vals))
    n = len(factories)
    opposition = raw.get("opposition")
    if opposition is None:
        opp = np.zeros((n, n))
    else:
        try:
            opp = np.asarray(opposition, dtype=float)
        except (TypeError, ValueError):
            w.fail("model.opposition", "expected an NxN numeric matrix")
            return None
        if opp.shape != (n, n):
            w.fail("model.opposition", f"expected shape ({n}, {n}), got {opp.shape}")
            return None
        if np.any(np.diag(opp) != 0.0):
            w.fail("model.opposition", "diagonal entries must be exactly zero")
            return None
        if np.any(opp < 0.0):
            bad = np.argwhere(opp < 0.0)[0]
            w.fail(f"model.opposition[{bad[0]}][{bad[1]}]", "negative opposition rate")
            return None
    try:
        return CellSpec(tuple(factories), opp)
    except ModelInputError as exc:
        w.fail("model", str(exc))
        return None


def _parse_stimulus(w: _Walker, raw: dict, n: int) -> StimulusProfile | None:
    if not isinstance(raw, dict):
        w.fail("stimulus", "expected an object")
        return None
    if not w.check_keys(raw, {"segments", "horizon"}, {"segments", "horizon"}, "stimulus"):
        return None
    segments = raw["segments"]
    if not isinstance(segments, list) or len(segments) != n:
        w.fail("stimulus.segments", f"expected one segment list per factory ({n})")
        return None
    parsed = []
    for idx, seg_list in enumerate(segments):
        path = f"stimulus.segments[{idx}]"
        if not isinstance(seg_list, list) or not seg_list:
            w.fail(path, "expected a non-empty list of [t_start, rate] pairs")
            return None
        segs = []
        for jdx, pair in enumerate(seg_list):
            if not isinstance(pair, list) or len(pair) != 2:
                w.fail(f"{path}[{jdx}]", "expected a [t_start, rate] pair")
                return None
            t = w.number(pair[0], f"{path}[{jdx}][0]", nonnegative=True)
            c = w.number(pair[1], f"{path}[{jdx}][1]", nonnegative=True)
            if t is None or c is None:
                return None
            segs.append((t, c))
        parsed.append(tuple(segs))
    horizon = w.number(raw["horizon"], "stimulus.horizon", positive=True)
    if horizon is None:
        return None
    try:
        return StimulusProfile(tuple(parsed), horizon)
    except ModelInputError as exc:
        w.fail("stimulus", str(exc))
        return None


def _parse_initial(w: _Walker, raw: dict, n: int):
    if not isinstance(raw, dict):
        w.fail("initial", "expected an object")
        return None
    if "random" in raw:
        if not w.check_keys(raw, {"random"}, {"random"}, "initial"):
            return None
        rnd = raw["random"]
        if not isinstance(rnd, dict) or not w.check_keys(
            rnd, {"low", "high"}, {"low", "high"}, "initial.random"
        ):
            return None
        low = w.number(rnd["low"], "initial.random.low", nonnegative=True)
        high = w.number(rnd["high"], "initial.random.high", positive=True)
        if low is None or high is None:
            return None
        if high <= low:
            w.fail("initial.random", "high must exceed low")
            return None
        return RandomInitial(low, high)
    if not w.check_keys(raw, {"factory", "product"}, {"factory", "product"}, "initial"):
        return None
    fac, prod = raw["factory"], raw["product"]
    for name, vec in (("factory", fac), ("product", prod)):
        if not isinstance(vec, list) or len(vec) != n:
            w.fail(f"initial.{name}", f"expected a list of {n} numbers")
            return None
    try:
        return CellState(np.asarray(fac, dtype=float), np.asarray(prod, dtype=float))
    except (ModelInputError, ValueError) as exc:
        w.fail("initial", str(exc))
        return None


def _parse_experiment(w: _Walker, raw: dict):
    if not isinstance(raw, dict):
        w.fail("experiment", "expected an object")
        return None, {}
    if not w.check_keys(raw, {"name", "params"}, set(), "experiment"):
        return None, {}
    name = raw.get("name")
    if name is not None:
        if name not in EXPERIMENT_PARAM_KEYS:
            w.fail("experiment.name", f"unknown experiment {name!r}")
            return None, {}
    params = raw.get("params", {})
    if not isinstance(params, dict):
        w.fail("experiment.params", "expected an object")
        return name, {}
    if name is not None:
        w.check_keys(params, EXPERIMENT_PARAM_KEYS[name], set(), "experiment.params")
    return name, dict(params)


def _parse_integrator(w: _Walker, raw: dict) -> IntegratorConfig | None:
    if not isinstance(raw, dict):
        w.fail("integrator", "expected an object")
        return None
    allowed = {"step", "output_stride", "steady_tol", "max_time"}
    if not w.check_keys(raw, allowed, set(), "integrator"):
        return None
    kwargs = {}
    for key in allowed & raw.keys():
        if key == "output_stride":
            if not isinstance(raw[key], int) or raw[key] < 1:
                w.fail("integrator.output_stride", "expected a positive integer")
                return None
            kwargs[key] = raw[key]
        else:
            v = w.number(raw[key], f"integrator.{key}", positive=True)
            if v is None:
                return None
            kwargs[key] = v
    try:
        return IntegratorConfig(**kwargs)
    except ModelInputError as exc:
        w.fail("integrator", str(exc))
        return None


def _parse_output(w: _Walker, raw: dict) -> OutputConfig | None:
    if not isinstance(raw, dict):
        w.fail("output", "expected an object")
        return None
    if not w.check_keys(raw, {"dir", "formats", "svg"}, set(), "output"):
        return None
    directory = raw.get("dir", "out")
    if not isinstance(directory, str):
        w.fail("output.dir", "expected a string")
        return None
    formats = raw.get("formats", ["csv"])
    if not isinstance(formats, list) or not all(f in ("csv", "json") for f in formats):
        w.fail("output.formats", "expected a list drawn from ['csv', 'json']")
        return None
    svg = raw.get("svg", False)
    if not isinstance(svg, bool):
        w.fail("output.svg", "expected a boolean")
        return None
    return OutputConfig(directory, tuple(formats), svg)


def parse_config(raw: dict) -> ScenarioConfig:
    """Validate a raw JSON object into a ScenarioConfig; raises ConfigError."""
    w = _Walker()
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a JSON object"])
    top_allowed = {
        "schema_version", "model", "stimulus", "initial",
        "experiment", "integrator", "output",
    }
    w.check_keys(raw, top_allowed, {"schema_version", "model"}, "")
    if w.issues:
        raise ConfigError(w.issues)
    if raw["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            [f"schema_version: expected {SCHEMA_VERSION}, got {raw['schema_version']!r}"]
        )
    spec = _parse_model(w, raw["model"])
    if spec is None:
        raise ConfigError(w.issues)
    stimulus = initial = None
    experiment_name, experiment_params = None, {}
    integrator = IntegratorConfig()
    output = OutputConfig()
    if "stimulus" in raw:
        stimulus = _parse_stimulus(w, raw["stimulus"], spec.n)
    if "initial" in raw:
        initial = _parse_initial(w, raw["initial"], spec.n)
    if "experiment" in raw:
        experiment_name, experiment_params = _parse_experiment(w, raw["experiment"])
    if "integrator" in raw:
        integrator = _parse_integrator(w, raw["integrator"]) or IntegratorConfig()
    if "output" in raw:
        output = _parse_output(w, raw["output"]) or OutputConfig()
    if w.issues:
        raise ConfigError(w.issues)
    return ScenarioConfig(
        spec=spec,
        stimulus=stimulus,
        initial=initial,
        experiment_name=experiment_name,
        experiment_params=experiment_params,
        integrator=integrator,
        output=output,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    """Load and validate a scenario file; JSON syntax errors carry line numbers."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    return parse_config(raw)


def dump_config(cfg: ScenarioConfig) -> dict:
    """Inverse of parse_config: a JSON-ready dict that round-trips."""
    out: dict = {
        "schema_version": SCHEMA_VERSION,
        "model": {
            "factories": [
                {
                    "growth": f.growth,
                    "growth_inhibition": f.growth_inhibition,
                    "production": f.production,
                    "production_inhibition": f.production_inhibition,
                }
                for f in cfg.spec.factories
            ],
            "opposition": cfg.spec.opposition.tolist(),
        },
    }
    if cfg.stimulus is not None:
        out["stimulus"] = {
            "segments": [[[t, c] for t, c in segs] for segs in cfg.stimulus.segments],
            "horizon": cfg.stimulus.horizon,
        }
    if isinstance(cfg.initial, RandomInitial):
        out["initial"] = {"random": {"low": cfg.initial.low, "high": cfg.initial.high}}
    elif isinstance(cfg.initial, CellState):
        out["initial"] = {
            "factory": cfg.initial.factory.tolist(),
            "product": cfg.initial.product.tolist(),
        }
    if cfg.experiment_name is not None or cfg.experiment_params:
        block: dict = {}
        if cfg.experiment_name is not None:
            block["name"] = cfg.experiment_name
        if cfg.experiment_params:
            block["params"] = cfg.experiment_params
        out["experiment"] = block
    out["integrator"] = {
        "step": cfg.integrator.step,
        "output_stride": cfg.integrator.output_stride,
        "steady_tol": cfg.integrator.steady_tol,
        "max_time": cfg.integrator.max_time,
    }
    out["output"] = {
        "dir": cfg.output.directory,
        "formats": list(cfg.output.formats),
        "svg": cfg.output.svg,
    }
    return out
