"""Command-line entry point: ``diracqca run|preset|verify``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import BoundaryError, ConfigError
from .harness.config import load_config, preset, validate_config
from .harness.experiments import run_experiment


def _levels(text: str) -> list[int]:
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--strict-boundary", action="store_true", help="forbid light-cone contact with the lattice edge")
    p.add_argument("--levels", type=_levels, help="comma-separated CG levels, e.g. 0,2")
    p.add_argument("--theta", type=float)
    p.add_argument("--steps", type=int)


def _apply_overrides(raw: dict, args: argparse.Namespace) -> dict:
    for key in ("seed", "levels", "theta", "steps"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if getattr(args, "strict_boundary", False):
        raw["boundary"] = "strict"
    if getattr(args, "out", None):
        raw["output_dir"] = args.out
    return raw


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diracqca", description="Dirac PUQCA coarse-graining experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config file")
    p_run.add_argument("config")
    p_run.add_argument("--out")
    _add_overrides(p_run)

    p_preset = sub.add_parser("preset", help="run a named preset")
    p_preset.add_argument("name")
    p_preset.add_argument("--out")
    _add_overrides(p_preset)

    p_verify = sub.add_parser("verify", help="run the oracle verification suite")
    p_verify.add_argument("--out")
    p_verify.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            raw = load_config(args.config)
        elif args.command == "preset":
            raw = preset(args.name)
            raw.setdefault("output_dir", f"out/{args.name}")
        else:
            raw = preset("verify_oracle")
            raw["output_dir"] = "out/verify"
        cfg = validate_config(_apply_overrides(raw, args))
        manifest = run_experiment(cfg)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2
    except BoundaryError as exc:
        print(f"boundary error: {exc}", file=sys.stderr)
        return 3
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    for check in manifest["checks"]:
        status = "PASS" if check["pass"] else "FAIL"
        print(f"{status}  {check['name']}: value={check['value']:.6g} tol={check['tolerance']:.3g}")
    print(f"outputs written to {cfg.output_dir}: {', '.join(manifest['outputs'] + ['manifest.json'])}")
    return 0 if manifest["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
