"""Command-line entry point.

Subcommands group the experiments by subject; each runs one or more config
files, prints a pass/fail line per experiment, writes result bundles and
auxiliary tables when an output directory is given, and exits 0 when all
checks pass, 1 when any fails, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import kernels
from .errors import ConfigError, SceneryflowError
from .experiments import parse_config, run_experiment

SUBCOMMAND_KINDS = {
    "scenery": {"invariance", "dimension", "diffeo-shift", "equidistribution",
                "prediction"},
    "spectrum": {"spectrum"},
    "phase": {"phase-trichotomy", "pushforward-phase"},
    "singularity": {"cross-base"},
    "rigidity": {"slope-detection", "cross-base"},
    "suite": None,  # any
}


def shipped_config_dir() -> Path:
    return Path(__file__).resolve().parent / "configs"


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sceneryflow",
        description="Zoom-dynamics experiments for digit-defined measures",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMAND_KINDS:
        p = sub.add_parser(name, help=f"run {name} experiment configs")
        p.add_argument("--config", required=(name != "suite"),
                       help="config file (or directory for `suite`)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="format of auxiliary tables")
    return ap


def _load_configs(command: str, config_arg: str | None):
    if command == "suite":
        directory = Path(config_arg) if config_arg else shipped_config_dir()
        if not directory.is_dir():
            raise ConfigError(f"suite expects a directory, got {directory}")
        paths = sorted(directory.glob("*.cfg"))
    else:
        paths = [Path(config_arg)]
    configs = []
    for path in paths:
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cfg = parse_config(path.read_text(encoding="utf-8"))
        allowed = SUBCOMMAND_KINDS[command]
        if allowed is not None and cfg.kind not in allowed:
            raise ConfigError(
                f"{path.name}: experiment kind {cfg.kind!r} does not belong to "
                f"subcommand {command!r} (allowed: {sorted(allowed)})"
            )
        configs.append(cfg)
    return configs


def _emit(bundle, out_dir: Path, fmt: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{bundle.experiment}.bundle.json").write_text(bundle.to_json())
    for name, payload in bundle.artifacts.items():
        if fmt == "json" and name.endswith(".csv"):
            rows = [line.split(",") for line in payload.strip().splitlines()]
            head, body = rows[0], rows[1:]
            payload = json.dumps([dict(zip(head, r)) for r in body], indent=2)
            name = name[:-4] + ".json"
        if fmt == "csv" and name.endswith(".json"):
            continue  # json artifacts are emitted as-is only in json mode
        (out_dir / name).write_text(payload)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        configs = _load_configs(args.command, args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    any_fail = False
    for cfg in configs:
        if args.seed is not None:
            cfg = type(cfg)(cfg.name, cfg.kind, args.seed, cfg.models,
                            cfg.diffeos, cfg.params)
        try:
            bundle = run_experiment(cfg, threads=args.threads)
        except ConfigError as exc:
            print(f"config error in {cfg.name}: {exc}", file=sys.stderr)
            return 2
        except SceneryflowError as exc:
            print(f"FAIL {cfg.name}: {exc}", file=sys.stderr)
            any_fail = True
            continue
        status = "PASS" if bundle.passed else "FAIL"
        n_ok = sum(c["passed"] for c in bundle.checks)
        print(f"{status} {bundle.experiment} [{bundle.kind}] "
              f"{n_ok}/{len(bundle.checks)} checks, "
              f"{bundle.runtime_seconds:.1f}s, backend={bundle.backend}")
        if not bundle.passed:
            any_fail = True
            for c in bundle.checks:
                if not c["passed"]:
                    print(f"  failed: {c['name']} = {c['value']} "
                          f"(wanted {c['op']} {c['threshold']})")
        if args.out:
            _emit(bundle, Path(args.out), args.format)
    return 1 if any_fail else 0


if __name__ == "__main__":
    sys.exit(main())
