"""Experiment configuration: strict parsing of JSON documents.

A document looks like::

    {
      "command": "simulate",
      "model": {"preset": "holling2", "params": {"c": 1.0}},
      "simulate": {"K1": 1000, "K2": 10, "T": 5, "seed": 7},
      "out": "out"
    }

or, for a custom model, ``"model": {"law_S": {...}, "law_M": {...},
"demography": {...}, "x_range": [1e-6, 1e6]}``.  Unknown keys are rejected
and every error names the offending path.  ``ExperimentConfig.to_dict``
returns the normalised document with all defaults filled in; parsing it
again yields an identical config.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .demography import demography_from_spec
from .errors import ConfigurationError
from .hazards import DEFAULT_X_RANGE, law_from_spec
from .harness import DEFAULT_LADDER
from .ibm import MODES
from .presets import PRESETS, build_preset, preset_initial_condition
from .responses import METHODS, ResponseModel

COMMANDS = ("responses", "simulate", "ode", "study")


def _require_dict(v, path):
    if not isinstance(v, dict):
        raise ConfigurationError("expected an object", path)
    return v


def _reject_unknown(d, allowed, path):
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigurationError(f"unknown key(s) {unknown}; allowed: {sorted(allowed)}", path)


def _number(d, key, path, *, required=False, default=None, lo=None, hi=None, lo_open=False, integer=False):
    p = f"{path}.{key}"
    if key not in d or d[key] is None:
        if required:
            raise ConfigurationError("required value is missing", p)
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigurationError(f"expected a number, got {v!r}", p)
    if integer:
        if isinstance(v, float):
            if not v.is_integer():
                raise ConfigurationError(f"expected an integer, got {v!r}", p)
            v = int(v)
    else:
        v = float(v)
    if not math.isfinite(v):
        raise ConfigurationError("must be finite", p)
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigurationError(f"must be {'>' if lo_open else '>='} {lo}, got {v!r}", p)
    if hi is not None and v > hi:
        raise ConfigurationError(f"must be <= {hi}, got {v!r}", p)
    return v


def _choice(d, key, path, choices, default):
    v = d.get(key, default)
    if v not in choices:
        raise ConfigurationError(f"must be one of {list(choices)}, got {v!r}", f"{path}.{key}")
    return v


def _grid(v, path):
    if isinstance(v, str):
        try:
            v = [float(s) for s in v.split(",") if s.strip()]
        except ValueError:
            raise ConfigurationError(f"cannot parse grid {v!r}", path) from None
    if not isinstance(v, (list, tuple)):
        raise ConfigurationError("expected a list of numbers", path)
    out = []
    for i, g in enumerate(v):
        if isinstance(g, bool) or not isinstance(g, (int, float)) or not math.isfinite(g):
            raise ConfigurationError(f"expected a finite number, got {g!r}", f"{path}[{i}]")
        out.append(float(g))
    return out


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


def _parse_model(spec, path=".model"):
    spec = _require_dict(spec, path)
    if "preset" in spec:
        _reject_unknown(spec, {"preset", "params", "x_range"}, path)
        name = spec["preset"]
        if name not in PRESETS:
            raise ConfigurationError(f"unknown preset {name!r}; available: {sorted(PRESETS)}", f"{path}.preset")
        params = _require_dict(spec.get("params", {}), f"{path}.params")
        defaults = PRESETS[name][1]
        _reject_unknown(params, defaults, f"{path}.params")
        merged = {k: _number(params, k, f"{path}.params", default=v) for k, v in defaults.items()}
        xr = _x_range(spec, path)
        try:
            build_preset(name, merged, xr)
        except ConfigurationError as exc:
            raise ConfigurationError(exc.message, exc.path or f"{path}.params") from None
        return {"preset": name, "params": merged, "x_range": list(xr)}
    _reject_unknown(spec, {"law_S", "law_M", "demography", "x_range"}, path)
    for req in ("law_S", "law_M", "demography"):
        if req not in spec:
            raise ConfigurationError("required value is missing", f"{path}.{req}")
    xr = _x_range(spec, path)
    model = _build_custom(spec, xr, path)
    return {
        "law_S": model.law_S.to_dict(),
        "law_M": model.law_M.to_dict(),
        "demography": model.rates.to_dict(),
        "x_range": list(xr),
    }


def _x_range(spec, path):
    if "x_range" not in spec:
        return tuple(DEFAULT_X_RANGE)
    v = _grid(spec["x_range"], f"{path}.x_range")
    if len(v) != 2 or not (0 < v[0] < v[1]):
        raise ConfigurationError("x_range must be [x_min, x_max] with 0 < x_min < x_max", f"{path}.x_range")
    return tuple(v)


def _build_custom(spec, xr, path) -> ResponseModel:
    law_S = law_from_spec(spec["law_S"], xr, f"{path}.law_S")
    law_M = law_from_spec(spec["law_M"], xr, f"{path}.law_M")
    rates = demography_from_spec(spec["demography"], f"{path}.demography")
    try:
        return ResponseModel(law_S, law_M, rates, xr, None, "custom")
    except ConfigurationError as exc:
        raise ConfigurationError(exc.message, path) from None


def build_model(model_dict) -> ResponseModel:
    if "preset" in model_dict:
        return build_preset(model_dict["preset"], model_dict["params"], tuple(model_dict["x_range"]))
    return _build_custom(model_dict, tuple(model_dict["x_range"]), ".model")


# ---------------------------------------------------------------------------
# command sections
# ---------------------------------------------------------------------------


def _initial(d, path, model_dict, options):
    ic = preset_initial_condition(model_dict["preset"]) if "preset" in model_dict else {}
    for key in ("x0", "y0"):
        default = ic.get(key)
        options[key] = _number(d, key, path, required=default is None, default=default, lo=0.0)


def _parse_responses(d, path, model_dict):
    _reject_unknown(d, {"grid", "method"}, path)
    grid = _grid(d.get("grid", [0.5, 1.0, 2.0]), f"{path}.grid")
    return {"grid": grid, "method": _choice(d, "method", path, METHODS, "default")}


def _parse_simulate(d, path, model_dict):
    allowed = {"K1", "K2", "T", "x0", "y0", "seed", "n_samples", "t_bins", "n_age_bins", "a_cap",
               "initial_status", "initial_age_max", "population_cap", "mode", "record_events"}
    _reject_unknown(d, allowed, path)
    o = {}
    for key in ("K1", "K2", "T"):
        o[key] = _number(d, key, path, required=True, lo=0.0, lo_open=True)
    _initial(d, path, model_dict, o)
    o["seed"] = _number(d, "seed", path, default=0, lo=0, hi=2 ** 64 - 1, integer=True)
    o["n_samples"] = _number(d, "n_samples", path, default=100, lo=1, integer=True)
    o["t_bins"] = _number(d, "t_bins", path, default=25, lo=1, integer=True)
    o["n_age_bins"] = _number(d, "n_age_bins", path, default=40, lo=1, integer=True)
    o["a_cap"] = _number(d, "a_cap", path, default=None, lo=0.0, lo_open=True)
    o["initial_status"] = _choice(d, "initial_status", path, ("S", "M"), "M")
    o["initial_age_max"] = _number(d, "initial_age_max", path, default=0.0, lo=0.0)
    o["population_cap"] = _number(d, "population_cap", path, default=10 ** 8, lo=1, integer=True)
    o["mode"] = _choice(d, "mode", path, MODES, "accrued")
    rec = d.get("record_events", False)
    if not isinstance(rec, bool):
        raise ConfigurationError("expected true or false", f"{path}.record_events")
    o["record_events"] = rec
    return o


def _parse_ode(d, path, model_dict):
    _reject_unknown(d, {"T", "x0", "y0", "rtol", "n_samples", "bracket"}, path)
    o = {"T": _number(d, "T", path, required=True, lo=0.0, lo_open=True)}
    _initial(d, path, model_dict, o)
    if o["x0"] <= 0:
        raise ConfigurationError("must be > 0", f"{path}.x0")
    o["rtol"] = _number(d, "rtol", path, default=1e-9, lo=0.0, lo_open=True, hi=1e-2)
    o["n_samples"] = _number(d, "n_samples", path, default=500, lo=1, integer=True)
    br = d.get("bracket")
    if br is not None:
        br = _grid(br, f"{path}.bracket")
        if len(br) != 2 or not (0 < br[0] < br[1]):
            raise ConfigurationError("bracket must be [x_lo, x_hi] with 0 < x_lo < x_hi", f"{path}.bracket")
    o["bracket"] = br
    return o


def _parse_study(d, path, model_dict):
    allowed = {"ladder", "T", "x0", "y0", "replicas", "seed_root", "n_samples", "t_bins", "n_age_bins", "a_cap",
               "timing"}
    _reject_unknown(d, allowed, path)
    o = {"T": _number(d, "T", path, required=True, lo=0.0, lo_open=True)}
    _initial(d, path, model_dict, o)
    ladder = d.get("ladder", [list(r) for r in DEFAULT_LADDER])
    if not isinstance(ladder, list) or not ladder:
        raise ConfigurationError("expected a non-empty list of [K1, K2] pairs", f"{path}.ladder")
    rungs = []
    for i, r in enumerate(ladder):
        rp = f"{path}.ladder[{i}]"
        if not isinstance(r, (list, tuple)) or len(r) != 2:
            raise ConfigurationError("expected [K1, K2]", rp)
        k = _grid(list(r), rp)
        if not (k[0] > 0 and k[1] > 0):
            raise ConfigurationError("K1 and K2 must be positive", rp)
        rungs.append(k)
    lams = [a / b for a, b in rungs]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ConfigurationError("K1/K2 must increase strictly along the ladder", f"{path}.ladder")
    o["ladder"] = rungs
    o["replicas"] = _number(d, "replicas", path, default=20, lo=1, integer=True)
    o["seed_root"] = _number(d, "seed_root", path, default=0, lo=0, hi=2 ** 64 - 1, integer=True)
    o["n_samples"] = _number(d, "n_samples", path, default=100, lo=1, integer=True)
    o["t_bins"] = _number(d, "t_bins", path, default=25, lo=1, integer=True)
    o["n_age_bins"] = _number(d, "n_age_bins", path, default=40, lo=1, integer=True)
    o["a_cap"] = _number(d, "a_cap", path, default=None, lo=0.0, lo_open=True)
    timing = d.get("timing", False)
    if not isinstance(timing, bool):
        raise ConfigurationError("expected true or false", f"{path}.timing")
    o["timing"] = timing
    return o


_SECTIONS = {"responses": _parse_responses, "simulate": _parse_simulate, "ode": _parse_ode, "study": _parse_study}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    model: dict
    options: dict
    out: str = "out"

    def to_dict(self):
        return {"command": self.command, "model": self.model, self.command: self.options, "out": self.out}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def build_model(self) -> ResponseModel:
        return build_model(self.model)


def parse_config(source) -> ExperimentConfig:
    """Validate a config given as a dict, a JSON string or a path to a JSON file."""
    if isinstance(source, dict):
        doc = source
    else:
        text = source
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise ConfigurationError(f"cannot read config: {exc}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid JSON: {exc}") from None
    doc = _require_dict(doc, "")
    _reject_unknown(doc, {"command", "model", "out", *COMMANDS}, "")
    if "command" not in doc:
        raise ConfigurationError("required value is missing", ".command")
    command = doc["command"]
    if command not in COMMANDS:
        raise ConfigurationError(f"must be one of {list(COMMANDS)}, got {command!r}", ".command")
    other = [c for c in COMMANDS if c != command and c in doc]
    if other:
        raise ConfigurationError(f"section(s) {other} do not belong to command {command!r}", "")
    if "model" not in doc:
        raise ConfigurationError("required value is missing", ".model")
    model = _parse_model(doc["model"])
    section = _require_dict(doc.get(command, {}), f".{command}")
    options = _SECTIONS[command](section, f".{command}", model)
    out = doc.get("out", "out")
    if not isinstance(out, str) or not out:
        raise ConfigurationError("expected a non-empty path", ".out")
    return ExperimentConfig(command, model, options, out)
