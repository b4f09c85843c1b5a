"""Scenario orchestration: evaluate every sweep point, write CSV/JSON/SVG."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import subprocess
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, to_dict
from .errors import ConfigurationError
from .model import build_basic_model, build_entanglement_model, conditional_bell_fidelity, reported_success
from .obe import build_coherent_drive_model, closed_form_flux, mean_output_field, quasi_steady_window
from .oracle import c1_flux, final_observables, integrate_master
from .plot import emit_plot
from .trajectory import run_ensemble

log = logging.getLogger(__name__)

CSV_HEADER = ("sweep_param", "sweep_value", "engine", "observable", "mean", "stderr", "n_traj", "seed")


def version_string() -> str:
    try:
        rev = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"], cwd=Path(__file__).parent,
            capture_output=True, text=True, timeout=5, check=True,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        rev = ""
    return f"{__version__}+g{rev}" if rev else __version__


class _Point:
    """Rows and diagnostics gathered for one sweep point."""

    def __init__(self):
        self.results: dict[str, dict[str, tuple[float, float]]] = {}
        self.n_traj: dict[str, int] = {}
        self.diagnostics: dict[str, float] = {}

    def put(self, engine: str, name: str, mean: float, se: float = 0.0) -> None:
        self.results.setdefault(engine, {})[name] = (float(mean), float(se))


def _oracle(point: _Point, model, cfg: RunConfig, prefix: str = "") -> dict[str, float]:
    rho, trace = integrate_master(model, cfg.integrator)
    obs = final_observables(model, rho)
    for name, v in obs.items():
        point.put("oracle", prefix + name, v)
    point.diagnostics[prefix + "oracle_max_trace_drift"] = float(trace.trace_drift.max())
    point.diagnostics[prefix + "oracle_min_eigenvalue"] = float(trace.min_eigenvalue.min())
    return obs


def _mcwf(point: _Point, model, cfg: RunConfig, workers: int, prefix: str = "") -> dict[str, tuple[float, float]]:
    ens = run_ensemble(model, cfg.integrator, cfg.n_traj, cfg.master_seed, workers=workers)
    for name, (m, se) in ens.observables.items():
        point.put("mcwf", prefix + name, m, se)
    for label in ens.channel_counts:
        point.put("mcwf", f"{prefix}jump_fraction.{label}", ens.jump_fraction(label))
    point.n_traj["mcwf"] = cfg.n_traj
    point.diagnostics[prefix + "mcwf_horizon_warnings"] = ens.horizon_warnings
    return ens.observables


def _engines(cfg: RunConfig) -> list[str]:
    return ["oracle", "mcwf"] if cfg.engine == "both" else [cfg.engine]


def _ratio(a: tuple[float, float], b: tuple[float, float]) -> tuple[float, float]:
    (x, sx), (y, sy) = a, b
    if y == 0:
        return 0.0, 0.0
    q = x / y
    rel = math.hypot(sx / x if x else 0.0, sy / y)
    return q, abs(q) * rel


def evaluate_point(cfg: RunConfig, workers: int = 1) -> _Point:
    point = _Point()
    p = cfg.params
    if cfg.scenario == "lambda_basic":
        model = build_basic_model(p)
        for eng in _engines(cfg):
            if eng == "oracle":
                _oracle(point, model, cfg)
            else:
                _mcwf(point, model, cfg, workers)
    elif cfg.scenario == "lambda_jitter":
        variants = {"ref": p.with_(gamma30_S=0.0), "jitter": p.with_(gamma30_S=p.gamma30_S or p.gamma31_S)}
        for eng in _engines(cfg):
            for tag, params in variants.items():
                model = build_basic_model(params)
                if eng == "oracle":
                    _oracle(point, model, cfg, tag + ".")
                else:
                    _mcwf(point, model, cfg, workers, tag + ".")
            res = point.results[eng]
            q, se = _ratio(res["jitter.absorbed"], res["ref.absorbed"])
            point.put(eng, "relative_decrease", 1.0 - q, se)
    elif cfg.scenario == "polarization_entanglement":
        model = build_entanglement_model(p)
        for eng in _engines(cfg):
            if eng == "oracle":
                _oracle(point, model, cfg)
            else:
                _mcwf(point, model, cfg, workers)
            res = point.results[eng]
            (bell, _), (succ, s_se) = res["bell"], res["success"]
            point.put(eng, "bell_fidelity", conditional_bell_fidelity(bell, succ))
            point.put(eng, "reported_success", reported_success(p, succ), p.eta_S * s_se)
    elif cfg.scenario == "coherent_obe":
        if cfg.engine == "mcwf":
            raise ConfigurationError("engine: coherent_obe has no trajectory observable; use oracle or both")
        model = build_coherent_drive_model(p)
        _, _, center = quasi_steady_window(p)
        if center > cfg.integrator.t_end:
            raise ConfigurationError(f"integrator.t_end: window center {center:.4g} lies beyond the horizon")
        _, trace = integrate_master(model, cfg.integrator, sample_every=10)
        flux = c1_flux(trace)
        i = int(np.argmin(np.abs(trace.times - center)))
        point.put("oracle", "flux_window", flux[i])
        point.put("oracle", "flux_peak", float(flux.max()))
        point.put("oracle", "flux_window_rel", flux[i] / float(flux.max()))
        point.put("oracle", "window_center", float(trace.times[i]))
        field = mean_output_field(p)
        point.put("closed_form", "mean_output_field_re", field.real)
        point.put("closed_form", "mean_output_field_im", field.imag)
        point.put("closed_form", "closed_form_flux", closed_form_flux(p))
        point.diagnostics["oracle_max_trace_drift"] = float(trace.trace_drift.max())
        point.diagnostics["oracle_min_eigenvalue"] = float(trace.min_eigenvalue.min())
    else:  # pragma: no cover - validated earlier
        raise ConfigurationError(f"unknown scenario {cfg.scenario!r}")
    return point


MAIN_OBSERVABLE = {
    "lambda_basic": "absorbed",
    "lambda_jitter": "jitter.absorbed",
    "polarization_entanglement": "reported_success",
    "coherent_obe": "flux_window_rel",
}


def _derived(cfg: RunConfig, xs: list[float], points: list[_Point]) -> dict:
    out: dict = {}
    key = MAIN_OBSERVABLE[cfg.scenario]
    engines = sorted({e for pt in points for e in pt.results})
    for eng in engines:
        ys = [pt.results.get(eng, {}).get(key, (math.nan,))[0] for pt in points]
        d: dict = {}
        if cfg.sweep is not None and len(xs) > 1 and cfg.scenario in ("lambda_basic", "lambda_jitter"):
            if cfg.sweep.path == "params.gamma32_T":
                ratios = [x / cfg.params.gamma31_T for x in xs]
                k = int(np.nanargmax(ys))
                d["peak_ratio"] = ratios[k]
                d["peak_value"] = ys[k]
                d["relative_to_peak"] = {repr(r): y / ys[k] for r, y in zip(ratios, ys)}
            if cfg.sweep.path == "params.eta":
                slope, intercept = np.polyfit(xs, ys, 1)
                fit = slope * np.asarray(xs) + intercept
                ss_res = float(np.sum((np.asarray(ys) - fit) ** 2))
                ss_tot = float(np.sum((np.asarray(ys) - np.mean(ys)) ** 2))
                d["slope"] = float(slope)
                d["intercept"] = float(intercept)
                d["r_squared"] = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        if cfg.scenario == "lambda_jitter":
            d["relative_decrease"] = [pt.results[eng]["relative_decrease"][0] for pt in points]
        if cfg.scenario == "polarization_entanglement":
            d["bell_fidelity"] = [pt.results[eng]["bell_fidelity"][0] for pt in points]
            d["reported_success"] = [pt.results[eng]["reported_success"][0] for pt in points]
        if d:
            out[eng] = d
    return out


def _csv_text(cfg: RunConfig, xs, points: list[_Point]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    param = cfg.sweep.path if cfg.sweep else ""
    for x, pt in zip(xs, points):
        for eng, res in pt.results.items():
            for name, (m, se) in res.items():
                is_mc = eng == "mcwf"
                w.writerow([
                    param, "" if x is None else repr(float(x)), eng, name, repr(m), repr(se),
                    pt.n_traj.get(eng, 0), cfg.master_seed if is_mc else "",
                ])
    return buf.getvalue()


def run(cfg: RunConfig, out_dir: str | Path = ".", *, workers: int = 1) -> dict:
    """Execute the configured scenario over its sweep; returns the JSON summary."""
    start = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    xs: list = list(cfg.sweep.values) if cfg.sweep else [None]
    points = []
    for x in xs:
        point_cfg = cfg if x is None else cfg.with_param(cfg.sweep.path, x)
        log.info("evaluating %s %s=%s", cfg.scenario, cfg.sweep.path if cfg.sweep else "-", x)
        points.append(evaluate_point(point_cfg, workers))

    (out_dir / cfg.outputs.csv).write_text(_csv_text(cfg, xs, points), encoding="utf-8")

    if cfg.outputs.svg:
        key = MAIN_OBSERVABLE[cfg.scenario]
        plot_x = [0.0 if x is None else x for x in xs]
        xlabel = cfg.sweep.path if cfg.sweep else "point"
        if cfg.sweep and cfg.sweep.path == "params.gamma32_T":
            plot_x = [x / cfg.params.gamma31_T for x in plot_x]
            xlabel = "Gamma32_T / Gamma31_T"
        series = {}
        for eng in sorted({e for pt in points for e in pt.results}):
            if all(key in pt.results.get(eng, {}) for pt in points):
                ys = [pt.results[eng][key] for pt in points]
                series[eng] = (plot_x, [m for m, _ in ys], [s for _, s in ys])
        y_range = (0.0, 1.0) if cfg.scenario != "coherent_obe" else None
        emit_plot(series, out_dir / cfg.outputs.svg, xlabel=xlabel, ylabel=key, title=cfg.scenario, y_range=y_range)

    summary = {
        "version": version_string(),
        "config": to_dict(cfg),
        "points": [
            {"sweep_value": x, "results": {e: {k: list(v) for k, v in r.items()} for e, r in pt.results.items()},
             "diagnostics": pt.diagnostics}
            for x, pt in zip(xs, points)
        ],
        "derived": _derived(cfg, [x for x in xs if x is not None], points),
        "wall_clock_s": time.perf_counter() - start,
    }
    (out_dir / cfg.outputs.json).write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    return summary
