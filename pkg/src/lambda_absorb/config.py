"""Run configuration: JSON schema, canonical defaults, validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any

from .errors import ConfigurationError
from .model import CascadeParams, PulseShape
from .obe import ObeParams
from .trajectory import IntegratorConfig

SCENARIOS = ("lambda_basic", "lambda_jitter", "polarization_entanglement", "coherent_obe")
ENGINES = ("mcwf", "oracle", "both")
TOP_KEYS = ("scenario", "params", "integrator", "ensemble", "sweep", "outputs", "engine")


@dataclass(frozen=True)
class SweepSpec:
    path: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class OutputSpec:
    csv: str = "results.csv"
    json: str = "summary.json"
    svg: str | None = None


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "lambda_basic"
    params: CascadeParams | ObeParams = field(default_factory=CascadeParams)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    n_traj: int = 10_000
    master_seed: int = 0
    sweep: SweepSpec | None = None
    outputs: OutputSpec = field(default_factory=OutputSpec)
    engine: str = "both"

    def with_param(self, path: str, value: float) -> "RunConfig":
        """Copy with one dotted ``params.*`` or ``integrator.*`` field replaced."""
        head, *rest = path.split(".")
        if head == "params":
            return replace(self, params=_set_path(self.params, rest, value))
        if head == "integrator":
            return replace(self, integrator=_set_path(self.integrator, rest, value))
        raise ConfigurationError(f"sweep.path: cannot sweep {path!r}")


def _set_path(obj, parts: list[str], value):
    name = parts[0]
    if len(parts) == 1:
        return replace(obj, **{name: value})
    return replace(obj, **{name: _set_path(getattr(obj, name), parts[1:], value)})


def _obj(raw: Any, path: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path or '<root>'}: expected an object, got {type(raw).__name__}")
    return raw


def _check_keys(raw: dict, allowed, path: str) -> None:
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigurationError(f"unknown key(s) {', '.join(where + k for k in unknown)}")


def _number(v: Any, path: str, *, integer: bool = False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigurationError(f"{path}: expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigurationError(f"{path}: must be finite")
    if integer:
        if int(v) != v:
            raise ConfigurationError(f"{path}: expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _build(cls, raw: dict, path: str, nested: dict | None = None):
    nested = nested or {}
    names = [f.name for f in fields(cls)]
    _check_keys(raw, names, path)
    kwargs = {}
    for k, v in raw.items():
        if k in nested:
            kwargs[k] = _build(nested[k], _obj(v, f"{path}.{k}"), f"{path}.{k}")
        elif cls is ObeParams and k == "beta":
            kwargs[k] = _beta(v, f"{path}.beta")
        else:
            kwargs[k] = _number(v, f"{path}.{k}")
    try:
        return cls(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def _beta(v: Any, path: str) -> complex:
    if isinstance(v, list) and len(v) == 2:
        return complex(_number(v[0], path + "[0]"), _number(v[1], path + "[1]"))
    return complex(_number(v, path))


def _param_fields(cls, prefix: str = "params") -> set[str]:
    out = set()
    for f in fields(cls):
        if f.name == "pulse":
            out |= {f"{prefix}.pulse.{g.name}" for g in fields(PulseShape)}
        else:
            out.add(f"{prefix}.{f.name}")
    return out


def validate_config(raw_text: str) -> RunConfig:
    """Parse and validate a JSON configuration document.

    Missing keys take the canonical defaults; unknown keys are rejected with
    their dotted path.
    """
    try:
        raw = json.loads(raw_text) if raw_text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}") from None
    raw = _obj(raw, "")
    _check_keys(raw, TOP_KEYS, "")

    scenario = raw.get("scenario", "lambda_basic")
    if scenario not in SCENARIOS:
        raise ConfigurationError(f"scenario: must be one of {SCENARIOS}, got {scenario!r}")
    engine = raw.get("engine", "both")
    if engine not in ENGINES:
        raise ConfigurationError(f"engine: must be one of {ENGINES}, got {engine!r}")

    params_raw = _obj(raw.get("params", {}), "params")
    if scenario == "coherent_obe":
        params = _build(ObeParams, params_raw, "params")
        sweepable = _param_fields(ObeParams)
    else:
        params = _build(CascadeParams, params_raw, "params", {"pulse": PulseShape})
        sweepable = _param_fields(CascadeParams)
    integrator = _build(IntegratorConfig, _obj(raw.get("integrator", {}), "integrator"), "integrator")
    sweepable |= {f"integrator.{f.name}" for f in fields(IntegratorConfig)}

    ens = _obj(raw.get("ensemble", {}), "ensemble")
    _check_keys(ens, ("n_traj", "master_seed"), "ensemble")
    n_traj = _number(ens.get("n_traj", 10_000), "ensemble.n_traj", integer=True)
    if n_traj < 1:
        raise ConfigurationError("ensemble.n_traj: must be >= 1")
    seed = _number(ens.get("master_seed", 0), "ensemble.master_seed", integer=True)
    if seed < 0:
        raise ConfigurationError("ensemble.master_seed: must be >= 0")

    sweep = None
    if raw.get("sweep") is not None:
        sw = _obj(raw["sweep"], "sweep")
        _check_keys(sw, ("path", "values"), "sweep")
        path = sw.get("path")
        if path not in sweepable:
            raise ConfigurationError(f"sweep.path: {path!r} does not name a numeric field; choose from {sorted(sweepable)}")
        vals = sw.get("values")
        if not isinstance(vals, list) or not vals:
            raise ConfigurationError("sweep.values: expected a non-empty list of numbers")
        sweep = SweepSpec(path, tuple(_number(v, f"sweep.values[{i}]") for i, v in enumerate(vals)))

    out = _obj(raw.get("outputs", {}), "outputs")
    _check_keys(out, ("csv", "json", "svg"), "outputs")
    for k, v in out.items():
        if v is not None and not isinstance(v, str):
            raise ConfigurationError(f"outputs.{k}: expected a file name, got {v!r}")
    outputs = OutputSpec(**{k: v for k, v in out.items() if v is not None or k == "svg"})

    cfg = RunConfig(scenario, params, integrator, n_traj, seed, sweep, outputs, engine)
    if sweep is not None:
        for v in sweep.values:
            try:
                cfg.with_param(sweep.path, v)
            except ConfigurationError as exc:
                raise ConfigurationError(f"sweep.values: {v!r} invalid for {sweep.path}: {exc}") from None
    return cfg


def to_dict(cfg: RunConfig) -> dict:
    """JSON-ready echo; ``validate_config(json.dumps(to_dict(c))) == c``."""
    p = cfg.params
    if isinstance(p, ObeParams):
        beta = complex(p.beta)
        params = {"beta": [beta.real, beta.imag], "gamma31": p.gamma31, "gamma32": p.gamma32, "eta": p.eta}
    else:
        params = {f.name: getattr(p, f.name) for f in fields(p) if f.name != "pulse"}
        params["pulse"] = {"omega0": p.pulse.omega0, "tau": p.pulse.tau, "t0": p.pulse.t0}
    d = {
        "scenario": cfg.scenario,
        "engine": cfg.engine,
        "params": params,
        "integrator": {f.name: getattr(cfg.integrator, f.name) for f in fields(cfg.integrator)},
        "ensemble": {"n_traj": cfg.n_traj, "master_seed": cfg.master_seed},
        "outputs": {"csv": cfg.outputs.csv, "json": cfg.outputs.json, "svg": cfg.outputs.svg},
    }
    if cfg.sweep is not None:
        d["sweep"] = {"path": cfg.sweep.path, "values": list(cfg.sweep.values)}
    return d
