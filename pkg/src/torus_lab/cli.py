"""Command line front end: ``lab list``, ``lab run --config FILE``, ``lab region --d D --res R``."""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import __version__
from .errors import LabError
from .experiments import ExperimentConfig, list_experiments, region_plotdata, run


def _cmd_list(args) -> int:
    catalog = list_experiments()
    if args.json:
        print(json.dumps(catalog, indent=2, default=str))
        return 0
    for entry in catalog:
        print(f"{entry['name']:<22} {entry['description']}")
        if args.verbose:
            for key, value in entry["params"].items():
                flag = " (sweep)" if key in entry["sweep"] else ""
                print(f"    {key} = {value!r}{flag}")
    return 0


def _cmd_run(args) -> int:
    try:
        config = ExperimentConfig.from_file(args.config)
    except OSError as exc:
        print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
        return 2
    if args.output:
        config.output = args.output
    if args.workers:
        config.workers = args.workers
    try:
        result = run(config)
    except OSError as exc:
        print(f"error: {exc.filename or config.output}: {exc.strerror or exc}", file=sys.stderr)
        return 2
    status = "PASS" if result.passed else "FAIL"
    print(f"{config.experiment}: {status} ({result.note})")
    if config.output:
        print(f"wrote {config.output}")
    return result.exit_code


def _cmd_region(args) -> int:
    rows = region_plotdata(args.d, args.res)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        wr = csv.writer(out, lineterminator="\n")
        wr.writerow(["inv_r", "inv_q", "region"])
        for ir, iq, tag in rows:
            wr.writerow([repr(float(ir)), repr(float(iq)), tag])
    finally:
        if args.output:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="Numerical experiments on the torus.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_list = sub.add_parser("list", help="show registered experiments")
    p_list.add_argument("--json", action="store_true", help="print the catalog as JSON")
    p_list.add_argument("-v", "--verbose", action="store_true", help="include default parameters")
    p_list.set_defaults(func=_cmd_list)

    p_run = sub.add_parser("run", help="run an experiment from a TOML config")
    p_run.add_argument("--config", required=True, help="TOML file with experiment, seed, params")
    p_run.add_argument("--output", help="CSV path (overrides the config)")
    p_run.add_argument("--workers", type=int, help="process pool size (overrides the config)")
    p_run.set_defaults(func=_cmd_run)

    p_reg = sub.add_parser("region", help="tag a grid of (1/r, 1/q) points")
    p_reg.add_argument("--d", type=int, required=True, help="dimension")
    p_reg.add_argument("--res", type=int, default=21, help="points per axis")
    p_reg.add_argument("--output", help="CSV path (default: stdout)")
    p_reg.set_defaults(func=_cmd_region)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
