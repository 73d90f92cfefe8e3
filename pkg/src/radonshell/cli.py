"""Command-line entry point: ``radonshell <experiment> [--config ...]`` and ``radonshell report``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import InvalidInputError
from .harness import KINDS, ConfigError, env_overrides, report, resolve, run

EXIT_OK, EXIT_HARD_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="radonshell", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run the {kind} experiment")
        sp.add_argument("--config", type=Path, help="JSON experiment config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="parent directory for run directories")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--d", type=int, help="ambient dimension")
        sp.add_argument("--soft-ok", action="store_true",
                        help="keep soft criteria non-gating even if the config gates them")
    rp = sub.add_parser("report", help="aggregate run manifests into a text report")
    rp.add_argument("manifests", nargs="+", type=Path, help="manifest files or run directories")
    rp.add_argument("--out", type=Path, help="write the report here instead of stdout")
    return ap


def _error(record: dict) -> int:
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return EXIT_CONFIG


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "report":
        try:
            text, bad = report(args.manifests)
        except InvalidInputError as exc:
            return _error({"error": "invalid-input", "message": str(exc)})
        if args.out:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_HARD_FAIL if bad else EXIT_OK
    try:
        file_obj = json.loads(args.config.read_text()) if args.config else None
    except (OSError, json.JSONDecodeError) as exc:
        return _error({"error": "invalid-config", "field": "config", "message": str(exc)})
    cli = {"seed": args.seed, "out": args.out, "workers": args.workers, "d": args.d}
    if args.soft_ok:
        cli["gate_soft"] = False
    try:
        cfg = resolve(args.command, file_obj, env_overrides(), cli)
    except ConfigError as exc:
        return _error(exc.record)
    except InvalidInputError as exc:
        return _error({"error": "invalid-config", "field": None, "message": str(exc)})
    try:
        manifest, run_dir = run(cfg)
    except InvalidInputError as exc:
        return _error({"error": "invalid-input", "message": str(exc)})
    for c in manifest.criteria:
        print(f"{c['status'].upper():9s} {c['name']}: {c['value']} ({c['threshold']})")
    print(f"run directory: {run_dir}")
    return EXIT_HARD_FAIL if manifest.hard_failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
