"""Command-line entry point.

    lambda-absorb run --config cfg.json [--engine mcwf|oracle|both] [--seed N] [--out-dir D]
    lambda-absorb sweep-ratio | sweep-eta | jitter | entangle | obe [options]

Exit status: 0 success, 1 runtime failure, 2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import validate_config
from .errors import ConfigurationError, LambdaAbsorbError
from .runner import run

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

PRESETS = {
    "sweep-ratio": {
        "scenario": "lambda_basic",
        "sweep": {"path": "params.gamma32_T", "values": [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0]},
        "outputs": {"csv": "sweep_ratio.csv", "json": "sweep_ratio.json", "svg": "sweep_ratio.svg"},
    },
    "sweep-eta": {
        "scenario": "lambda_basic",
        "sweep": {"path": "params.eta", "values": [0.0, 0.25, 0.5, 0.75, 1.0]},
        "outputs": {"csv": "sweep_eta.csv", "json": "sweep_eta.json", "svg": "sweep_eta.svg"},
    },
    "jitter": {
        "scenario": "lambda_jitter",
        "params": {"gamma30_S": 10.0},
        "outputs": {"csv": "jitter.csv", "json": "jitter.json"},
    },
    "entangle": {
        "scenario": "polarization_entanglement",
        "params": {"eta": 0.3, "eta_S": 0.3},
        "outputs": {"csv": "entangle.csv", "json": "entangle.json"},
    },
    "obe": {
        "scenario": "coherent_obe",
        "engine": "oracle",
        "params": {"beta": 0.01, "gamma31": 1.0, "gamma32": 1.0, "eta": 1.0},
        "outputs": {"csv": "obe.csv", "json": "obe.json"},
    },
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--engine", choices=("mcwf", "oracle", "both"))
    p.add_argument("--seed", type=int, help="ensemble master seed")
    p.add_argument("--n-traj", type=int, help="number of trajectories")
    p.add_argument("--out-dir", default=".", help="directory for CSV/JSON/SVG output")
    p.add_argument("--workers", type=int, default=1, help="worker processes for trajectories")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lambda-absorb", description="Single-photon absorption by a lambda emitter.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("run", help="run a JSON configuration")
    p.add_argument("--config", required=True, type=Path)
    _common(p)
    for name, preset in PRESETS.items():
        p = sub.add_parser(name, help=f"preset: {preset['scenario']}")
        _common(p)
    return parser


def _apply_overrides(raw: dict, args) -> dict:
    raw = json.loads(json.dumps(raw))
    if args.engine:
        raw["engine"] = args.engine
    if args.seed is not None:
        raw.setdefault("ensemble", {})["master_seed"] = args.seed
    if args.n_traj is not None:
        raw.setdefault("ensemble", {})["n_traj"] = args.n_traj
    return raw


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            try:
                raw = json.loads(args.config.read_text(encoding="utf-8") or "{}")
            except OSError as exc:
                raise ConfigurationError(f"cannot read config: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"invalid JSON in {args.config}: {exc}") from None
        else:
            raw = PRESETS[args.command]
        cfg = validate_config(json.dumps(_apply_overrides(raw, args)))
    except ConfigurationError as exc:
        print(f"lambda-absorb: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        summary = run(cfg, args.out_dir, workers=args.workers)
    except ConfigurationError as exc:
        print(f"lambda-absorb: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LambdaAbsorbError, ArithmeticError, OSError) as exc:
        print(f"lambda-absorb: {type(exc).__module__}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    derived = summary.get("derived")
    if derived:
        print(json.dumps(derived, indent=2, sort_keys=True))
    print(f"wrote {Path(args.out_dir) / cfg.outputs.csv} and {Path(args.out_dir) / cfg.outputs.json}")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
