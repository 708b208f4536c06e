"""Experiment configuration: YAML schema, defaults and validation.

Schema (every key optional; rates in units of g)::

    mode: single            # single | network | sweep-gamma | sweep-ramp | formulas
    params:                 # node parameters (shared by both nodes in network mode)
      g: 1.0
      delta: 50.0
      ramp: 0.01
      gamma: 0.1
      epsilon: 1000.0       # lab-frame carrier, only used when frame: lab
      frame: rwa            # rwa | lab
      noise: super          # super | lab | none
    right: {...}            # network mode: overrides for the right node
    sweep:
      variable: gamma       # gamma | ramp
      start: 0.0
      stop: 1.0
      count: 11
      scale: linear         # linear | log
      values: [...]         # explicit list, replaces start/stop/count
    integrator:
      base_step: null       # null = frame-dependent default
      tolerance: null       # null = 1e-9 rotating frames, 1e-11 lab frame
      max_halvings: 20
      record_stride: null
    output_path: out
    jobs: null              # sweep workers, null = all cores
    plot: true              # also render PNG figures
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .dynamics import IntegratorConfig
from .model import ConfigError, SystemParams

__all__ = ["ExperimentConfig", "SweepSpec", "config_from_dict", "load_config"]

MODES = ("single", "network", "sweep-gamma", "sweep-ramp", "formulas")

MODE_DEFAULTS: dict[str, dict[str, Any]] = {
    "single": {"delta": 50.0, "ramp": 0.01, "gamma": 0.1},
    "network": {"delta": 70.0, "ramp": 0.01, "gamma": 0.1},
    "sweep-gamma": {"delta": 70.0, "ramp": 0.01, "gamma": 0.0},
    "sweep-ramp": {"delta": 50.0, "ramp": 0.01, "gamma": 0.1},
    "formulas": {"delta": 50.0, "ramp": 0.01, "gamma": 0.1},
}

SWEEP_DEFAULTS: dict[str, dict[str, Any]] = {
    "sweep-gamma": {"variable": "gamma", "start": 0.0, "stop": 1.0, "count": 11, "scale": "linear"},
    "sweep-ramp": {"variable": "ramp", "start": 0.002, "stop": 0.02, "count": 4, "scale": "log"},
}

PARAM_KEYS = {f.name for f in dataclasses.fields(SystemParams)}
RATE_KEYS = ("g", "delta", "ramp", "gamma", "epsilon")
TOP_KEYS = {"mode", "params", "right", "sweep", "integrator", "output_path", "jobs", "seed", "plot"}


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float = 0.0
    stop: float = 1.0
    count: int = 2
    scale: str = "linear"
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.variable not in ("gamma", "ramp"):
            raise ConfigError("sweep.variable", f"must be gamma or ramp, got {self.variable!r}")
        if self.scale not in ("linear", "log"):
            raise ConfigError("sweep.scale", "must be linear or log")
        if self.values is None:
            if self.count < 2:
                raise ConfigError("sweep.count", "must be >= 2")
            # a degenerate range is allowed; a reversed one is not
            if self.start > self.stop:
                raise ConfigError("sweep.start", "must not exceed sweep.stop")
            if self.scale == "log" and self.start <= 0:
                raise ConfigError("sweep.start", "must be > 0 for a log sweep")
        elif len(self.values) < 1:
            raise ConfigError("sweep.values", "must not be empty")

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.array(self.values, dtype=float)
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "single"
    params: SystemParams = field(default_factory=SystemParams)
    params_right: SystemParams | None = None
    sweep: SweepSpec | None = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    output_path: Path = Path("out")
    jobs: int | None = None
    seed: int | None = None
    plot: bool = True


def _number(key: str, value: Any, kind=float):
    if isinstance(value, bool):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(key, f"expected a number, got {value!r}") from None
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _mapping(key: str, value: Any) -> Mapping[str, Any]:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise ConfigError(key, "expected a mapping")
    return value


def _params(section: str, raw: Mapping[str, Any], base: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in raw.items():
        if key not in PARAM_KEYS:
            raise ConfigError(f"{section}.{key}", "unknown parameter")
        merged[key] = _number(f"{section}.{key}", value) if key in RATE_KEYS else value
    return merged


def _build_params(section: str, values: dict[str, Any]) -> SystemParams:
    try:
        p = SystemParams(**values)
    except ConfigError as exc:
        raise ConfigError(f"{section}.{exc.key}", str(exc).split(": ", 1)[1]) from None
    except ValueError as exc:
        key = "frame" if "Frame" in str(exc) else "noise"
        raise ConfigError(f"{section}.{key}", str(exc)) from None
    p = p.normalized()
    if not p.strong_drive:
        raise ConfigError(f"{section}.delta", "run modes need delta/g >= 10")
    return p


def config_from_dict(data: Mapping[str, Any] | None) -> ExperimentConfig:
    data = _mapping("<root>", data)
    for key in data:
        if key not in TOP_KEYS:
            raise ConfigError(key, "unknown key")
    mode = data.get("mode", "single")
    if mode not in MODES:
        raise ConfigError("mode", f"must be one of {', '.join(MODES)}")

    shared = _params("params", _mapping("params", data.get("params")), MODE_DEFAULTS[mode])
    params = _build_params("params", shared)
    right = None
    if data.get("right") is not None:
        if mode not in ("network", "sweep-gamma"):
            raise ConfigError("right", "only valid in network modes")
        right = _build_params("right", _params("right", _mapping("right", data["right"]), shared))
        if not math.isclose(right.duration, params.duration, rel_tol=1e-12):
            raise ConfigError("right.ramp", "both nodes must share the ramp rate")

    sweep = None
    if mode in SWEEP_DEFAULTS:
        raw = dict(SWEEP_DEFAULTS[mode])
        given = _mapping("sweep", data.get("sweep"))
        if "values" in given:
            raw.pop("start"), raw.pop("stop"), raw.pop("count")
        raw.update(given)
        for key in raw:
            if key not in {f.name for f in dataclasses.fields(SweepSpec)}:
                raise ConfigError(f"sweep.{key}", "unknown key")
        if raw["variable"] != SWEEP_DEFAULTS[mode]["variable"]:
            raise ConfigError("sweep.variable", f"mode {mode} sweeps {SWEEP_DEFAULTS[mode]['variable']}")
        if "values" in raw:
            vals = raw["values"]
            if not isinstance(vals, (list, tuple)):
                raise ConfigError("sweep.values", "expected a list")
            raw["values"] = tuple(_number("sweep.values", v) for v in vals)
        for key in ("start", "stop"):
            if key in raw:
                raw[key] = _number(f"sweep.{key}", raw[key])
        if "count" in raw:
            raw["count"] = _number("sweep.count", raw["count"], int)
        sweep = SweepSpec(**raw)
        var = sweep.variable
        for v in sweep.grid():
            if (var == "gamma" and v < 0) or (var == "ramp" and v <= 0):
                raise ConfigError(f"sweep.{'values' if sweep.values else 'start'}",
                                  f"{var} value {v!r} out of range")
    elif data.get("sweep") is not None:
        raise ConfigError("sweep", f"not valid in mode {mode}")

    raw_int = _mapping("integrator", data.get("integrator"))
    icfg: dict[str, Any] = {}
    for key, value in raw_int.items():
        if key not in {f.name for f in dataclasses.fields(IntegratorConfig)}:
            raise ConfigError(f"integrator.{key}", "unknown key")
        if value is None:
            continue
        kind = int if key in ("max_halvings", "record_stride") else float
        icfg[key] = _number(f"integrator.{key}", value, kind)
    try:
        integrator = IntegratorConfig(**icfg)
    except ValueError as exc:
        key = str(exc).split(" ", 1)[0]
        raise ConfigError(f"integrator.{key}", str(exc)) from None

    jobs = data.get("jobs")
    if jobs is not None:
        jobs = _number("jobs", jobs, int)
        if jobs < 1:
            raise ConfigError("jobs", "must be >= 1")
    plot = data.get("plot", True)
    if not isinstance(plot, bool):
        raise ConfigError("plot", "expected true or false")
    output = data.get("output_path", "out")
    if not isinstance(output, (str, Path)):
        raise ConfigError("output_path", "expected a path")
    return ExperimentConfig(
        mode=mode,
        params=params,
        params_right=right,
        sweep=sweep,
        integrator=integrator,
        output_path=Path(output),
        jobs=jobs,
        seed=data.get("seed"),
        plot=plot,
    )


def read_config_dict(path) -> dict[str, Any]:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"invalid YAML in {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a mapping")
    return data


def load_config(path) -> ExperimentConfig:
    """Read, validate and default an experiment configuration file."""
    return config_from_dict(read_config_dict(path))
