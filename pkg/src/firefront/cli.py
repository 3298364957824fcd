"""Command line entry point: ``firefront {simulate,forecast,score,sdf,contour}``.

Exit codes: 0 success, 1 validation error, 2 I/O error. Diagnostics go to
stderr; results only to files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .pipeline import RunConfig, cmd_contour, cmd_forecast, cmd_score, cmd_sdf, cmd_simulate, load_config

COMMANDS = {
    "simulate": cmd_simulate,
    "forecast": cmd_forecast,
    "score": cmd_score,
    "sdf": cmd_sdf,
    "contour": cmd_contour,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="firefront", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="RunConfig JSON, or a run_manifest.json to replay")
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--seed", dest="master_seed", type=int, help="master seed")
    parser.add_argument("--ensembles", type=int, help="ensemble size")
    parser.add_argument("--alpha", dest="alpha_sig", type=float, help="significance level of the intervals")
    parser.add_argument("--holdout", dest="holdout_index", type=int, help="1-based observation index to forecast")
    parser.add_argument("--input", help="boundary GeoJSON, phi directory or field CSV")
    parser.add_argument("--truth", help="truth field CSV, boundary GeoJSON or phi directory")
    parser.add_argument("--forecast", dest="forecast_dir", help="directory holding median/lower/upper CSVs")
    parser.add_argument("--mask", help="constraint mask CSV for simulate (replaces the built-in barrier)")
    parser.add_argument("--constrained", action="store_true", default=None,
                        help="simulate with the built-in barrier band")
    parser.add_argument("--steps", type=int, help="simulation steps")
    parser.add_argument("--workers", type=int, help="worker processes for the ensemble")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {k: getattr(args, k) for k in (
        "out_dir", "master_seed", "alpha_sig", "holdout_index", "input", "truth",
        "forecast_dir", "mask", "constrained", "steps", "workers") if getattr(args, k) is not None}
    if args.ensembles is not None:
        overrides["priors"] = replace(cfg.priors, n_ensemble=args.ensembles)
    return replace(cfg, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        COMMANDS[args.command](cfg)
    except OSError as exc:
        print(f"firefront: I/O error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError, json.JSONDecodeError, RuntimeError) as exc:
        print(f"firefront: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
