"""Command line: ``tunnelshift run|list|validate``.

Exit codes: 0 success, 1 unexpected error, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from .scenarios import CATALOG, ConfigError, ScenarioFailure, parse_config, run

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tunnelshift", description="Run configured reproduction scenarios.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario config and write CSVs plus manifest.json")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides [output] dir)")
    r.add_argument("--seed", type=_seed, default=None, help="RNG seed for pointer sampling")
    r.add_argument("--preset", choices=("paper", "desk"), default=None)
    sub.add_parser("list", help="list scenario ids")
    v = sub.add_parser("validate", help="parse a config and print the resolved values")
    v.add_argument("config")
    v.add_argument("--preset", choices=("paper", "desk"), default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for sid, spec in CATALOG.items():
                print(f"{sid:8s} {spec.summary}  [presets: {', '.join(spec.presets)}]")
            return EXIT_OK
        cfg = parse_config(args.config, inline=False)
        if args.command == "validate":
            if args.preset and args.preset != cfg.preset:
                if args.preset not in CATALOG[cfg.scenario].presets:
                    raise ConfigError(f"scenario '{cfg.scenario}' has no preset '{args.preset}'")
                cfg = cfg.with_preset(args.preset)
            print(json.dumps(cfg.echo(), indent=2, sort_keys=True))
            return EXIT_OK
        m = run(cfg, args.out, args.seed, args.preset)
        out = args.out or cfg.output_dir
        for o in m.outputs:
            print(f"wrote {out}/{o['file']}  sha256={o['sha256'][:16]}")
        for w in m.warnings:
            print(f"warning: {w['category']}: {w['message']}", file=sys.stderr)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as exc:  # noqa: BLE001 - report category and exit
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
