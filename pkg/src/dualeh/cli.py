"""``dualeh`` command line: run presets, validate and calibrate config files."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .config import ConfigError, config_violations, load_config
from .energy import ContractViolation
from .engine import SimConfig, calibration_pilot
from .experiments import PRESETS, check_writable, preset_from_file, run_experiment, write_csv, write_traces
from .policies import calibrate_uncoordinated

EXIT_CONFIG = 2
EXIT_CONTRACT = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualeh", description="Dual energy-harvesting link simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or a config file and write a CSV")
    run.add_argument("target", help=f"preset name ({', '.join(PRESETS)}) or config path")
    run.add_argument("--horizon", type=int, help="slots per run (default 10^7 for presets)")
    run.add_argument("--seed", type=int, help="base seed")
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    run.add_argument("--out", help="output CSV path (default <target>.csv)")
    run.add_argument("--trace", action="store_true", help="also write per-slot traces next to the CSV")

    val = sub.add_parser("validate", help="check a config file and list every violation")
    val.add_argument("path")

    cal = sub.add_parser("calibrate", help="print the uncoordinated pattern (n_plus, n_minus) for a config")
    cal.add_argument("path")
    return p


def _err(msg: str) -> None:
    print(f"dualeh: {msg}", file=sys.stderr)


def _cmd_run(args) -> int:
    if args.target in PRESETS:
        preset = PRESETS[args.target]
        stem = args.target
    else:
        path = Path(args.target)
        if not path.is_file():
            _err(f"unknown preset or missing config file: {args.target!r} (presets: {', '.join(PRESETS)})")
            return EXIT_CONFIG
        preset = preset_from_file(path)
        stem = path.stem
    out = Path(args.out) if args.out else Path(f"{stem}.csv")
    check_writable(out)
    try:
        rows = run_experiment(preset, horizon=args.horizon, seed=args.seed, trials=args.trials, workers=args.workers)
        write_csv(preset, rows, out)
        if args.trace:
            write_traces(preset, rows, out.with_name(out.stem + "_traces"))
    except (ContractViolation, AssertionError) as exc:
        _err(f"contract violation: {exc}")
        return EXIT_CONTRACT
    print(out)
    return 0


def _cmd_validate(args) -> int:
    bad = config_violations(load_config(args.path))
    if not bad:
        print("ok")
        return 0
    for line in bad:
        print(line)
    return 1


def _cmd_calibrate(args) -> int:
    raw = load_config(args.path)
    raw.pop("sweep", None)
    cfg = SimConfig.from_dict(raw)
    if cfg.policy == "unconstrained":
        cfg = cfg.replace(policy="coordinated")
    pattern = calibrate_uncoordinated(calibration_pilot(cfg))
    print(f"n_plus={pattern.n_plus} n_minus={pattern.n_minus}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "calibrate": _cmd_calibrate}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        for line in exc.violations:
            _err(line)
        return EXIT_CONFIG
    except OSError as exc:
        _err(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
