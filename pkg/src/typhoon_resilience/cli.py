"""Command-line entry point: ``typhoon-resilience <subcommand> [options]``.

Subcommands: simulate-wind, failure-rates, weights, assess, strategies.
Values come from ``--config`` (the bundled ``run.toml`` when omitted) and
any flag given on the command line wins over the config file.

Exit status: 0 ok, 2 invalid input, 3 numeric failure, 4 target not met
(``assess --strict`` only).
"""

import argparse
import logging
import sys
from pathlib import Path

from .grid_case import bundled_path
from .pipeline import COMMANDS, EXIT_VALIDATION, ConfigError, RunConfig, StageError, run

log = logging.getLogger("typhoon_resilience")

# flag -> (config key, type)
PATH_FLAGS = {"--case": "case", "--geography": "geography", "--terrain": "terrain", "--typhoon": "typhoon",
              "--scenarios": "scenarios", "--dataset": "dataset", "--weights": "weights",
              "--pairwise": "pairwise", "--strategies": "strategies"}
VALUE_FLAGS = {"--mode": ("mode", str), "--dt-min": ("dt_min", float), "--spacing-m": ("spacing_m", float),
               "--J": ("J", int), "--R-set": ("R_set", float), "--trees": ("trees", int),
               "--max-depth": ("max_depth", int), "--min-leaf": ("min_leaf", int), "--seed": ("seed", int),
               "--synthetic-size": ("synthetic_size", int), "--cost-per-km": ("cost_per_km", float),
               "--method": ("method", str), "--hardening": ("hardening", str), "--oob-mode": ("oob_mode", str),
               "--op-time-sign": ("op_time_sign", str), "--workers": ("workers", int),
               "--force-k": ("force_k", float)}


def build_parser():
    parser = argparse.ArgumentParser(prog="typhoon-resilience", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="run configuration (TOML)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")
        p.add_argument("-v", "--verbose", action="store_true")
        for flag, key in PATH_FLAGS.items():
            p.add_argument(flag, dest=key, help=f"override [paths] {key}")
        for flag, (key, typ) in VALUE_FLAGS.items():
            p.add_argument(flag, dest=key, type=typ, help=f"override [run] {key}")
        if name == "assess":
            p.add_argument("--strict", action="store_true", help="exit 4 when R_sys exceeds R_set")
    return parser


def config_from_args(args):
    path = args.config if args.config is not None else bundled_path("run.toml")
    cfg = RunConfig.from_file(path)
    values = {}
    for key in PATH_FLAGS.values():
        v = getattr(args, key)
        if v is None:
            continue
        # flag paths are relative to the working directory, not the config file
        if not (v.startswith("bundled:") or v == "synthetic"):
            v = str(Path(v).resolve())
        values[key] = v
    for key, _ in VALUE_FLAGS.values():
        values[key] = getattr(args, key)
    return cfg.override(**values)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (ConfigError, OSError, TypeError) as exc:
        print(f"error in stage 'config': {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        code = run(args.command, cfg, args.out, strict=getattr(args, "strict", False))
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    if code == 4:
        print("R_sys exceeds R_set: corridor strengthening required", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
