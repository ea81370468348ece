"""``hammersim`` command line.

    hammersim run <config> [--seed N] [--out path] [--flip-log path]
    hammersim sweep <config> --axis KEY --values v1,v2,... [--out path]
    hammersim analyze --formula NAME --args k=v [k=v ...]
    hammersim trace <config> --out path
    hammersim spd <config> [--out path]
"""
from __future__ import annotations

import argparse
import sys

from . import analytics
from .config import ExperimentConfig
from .dram import export_adjacency
from .errors import ConfigError, HammersimError
from .faults import write_flip_log
from .harness import prepare, run_trials, sweep
from .report import format_csv
from .workloads import write_trace


def _write_or_print(text: str, path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config)
    if getattr(args, "seed", None) is not None:
        config = config.with_seed(args.seed)
    return config


def cmd_run(args):
    config = _load(args)
    reports = run_trials(config)
    _write_or_print(format_csv(reports), args.out or config.out)
    flip_log = args.flip_log or config.flip_log
    if flip_log:
        write_flip_log([f for r in reports for f in r.flip_log], flip_log)


def cmd_sweep(args):
    config = _load(args)
    values = [v for v in args.values.split(",") if v.strip()]
    reports = sweep(config, args.axis, values)
    _write_or_print(format_csv(reports), args.out or config.out)


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def cmd_analyze(args):
    if args.formula not in analytics.FORMULAS:
        raise ConfigError("--formula", f"unknown formula; choose from {', '.join(analytics.FORMULAS)}")
    fn, params = analytics.FORMULAS[args.formula]
    given = {}
    for item in args.args:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError("--args", f"expected key=value, got {item!r}")
        if key not in params:
            raise ConfigError(f"--args {key}", f"{args.formula} takes {', '.join(params)}")
        given[key] = _number(value)
    missing = [p for p in params if p not in given and p != "k"]
    if missing:
        raise ConfigError(f"--args {missing[0]}", "missing argument")
    result = fn(*(given[p] for p in params if p in given))
    line = f"{args.formula} = {result}"
    if args.formula == "required_multiplier":
        overhead = analytics.refresh_time_overhead(65_536, given["window_ms"], 100, result)
        if overhead >= 1.0:
            line += f"  (impractical: {overhead:.0%} of time refreshing for 65536 rows at tRFC_row=100ns)"
    print(line)


def cmd_trace(args):
    config = _load(args)
    _, _, trace = prepare(config)
    write_trace(trace, args.out)


def cmd_spd(args):
    config = _load(args)
    device, _, _ = prepare(config)
    _write_or_print(export_adjacency(device), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hammersim", description="DRAM disturbance-error simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment (all configured trials)")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--flip-log")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run once per value of a numeric config key")
    p.add_argument("config")
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="evaluate a closed-form model")
    p.add_argument("--formula", required=True)
    p.add_argument("--args", nargs="*", default=[])
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("trace", help="write the configured workload as a trace file")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("spd", help="export the configured device's row adjacency")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spd)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"hammersim: config error: {exc}", file=sys.stderr)
        return 2
    except (HammersimError, ValueError, OSError) as exc:
        print(f"hammersim: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
