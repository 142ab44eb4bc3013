"""Command line entry point: ``canmeas check|sweep|mean-dependence``.

Exit codes: 0 pass, 1 invariant failure, 2 configuration or guard error.
"""
import argparse
import json
import os
import sys

from canmeas.errors import CanmeasError
from canmeas.harness import ExperimentConfig, bundled_config, cmd_check, cmd_mean_dependence, cmd_sweep

_DEFAULT_CONFIG = {"check": "default", "sweep": "default", "mean-dependence": "mean_dependence"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="canmeas", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("check", "run the invariant suite and oracles; write report.json"),
        ("sweep", "convergence sweep over s; write sweep.csv"),
        ("mean-dependence", "compare two mean kernels on the same observable"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="config JSON (default: bundled example)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=int(os.environ.get("CANMEAS_THREADS", "1")))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            config = ExperimentConfig.load(args.config)
        else:
            config = bundled_config(_DEFAULT_CONFIG[args.command])
        if args.command == "check":
            code, report = cmd_check(config, args.out, args.seed, args.threads)
            for c in report.invariants:
                print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {c.value:.3e} (tol {c.tolerance:g})")
            for r in report.oracle_reports:
                print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  {r.max_abs_error:.3e} (tol {r.tolerance:g})")
        elif args.command == "sweep":
            code, report, text = cmd_sweep(config, args.out, args.seed, args.threads)
            sys.stdout.write(text)
            for name, value in report.flags.items():
                print(f"# {name}: {value}")
        else:
            code, result = cmd_mean_dependence(config, args.out, args.seed, args.threads)
            print(json.dumps({k: result[k] for k in (
                "kernels", "operator_difference", "relative_operator_difference",
                "max_bin_probability_difference")}, indent=2))
    except CanmeasError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
