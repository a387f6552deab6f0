"""Command-line entry point: ``neuroprune <experiment> [options]``."""

from __future__ import annotations

import argparse
import sys
import time

from .experiments.campaigns import run_campaign
from .experiments.config import EXPERIMENTS, ConfigError, parse_config
from .experiments.io import write_outputs

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 2, 3

# flag -> config field
_FLAGS = {
    "seed": ("--seed", int), "trials": ("--trials", int), "out": ("--out", str),
    "workers": ("--workers", int), "d": ("--d", int), "n_h": ("--nh", int),
    "epsilon": ("--eps", float), "r": ("--r", float), "cap_c": ("--cap-c", float),
    "gamma": ("--gamma", float), "c": ("--c", float), "t_cap": ("--t-cap", int),
    "p": ("--p", float), "q": ("--q", float), "k": ("--k", int), "pool": ("--pool", int),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neuroprune", description="Neuron-pruning vs weight-pruning experiments.")
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} campaign")
        sp.add_argument("--config", help="JSON config file (keys are ExperimentConfig fields)")
        for key, (flag, typ) in _FLAGS.items():
            sp.add_argument(flag, dest=key, type=typ, default=None)
        sp.add_argument("--nh-sweep", dest="n_h_sweep", type=int, nargs="+", default=None,
                        help="hidden widths for the separation sweep")
        sp.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in (*_FLAGS, "n_h_sweep")}
    overrides["name"] = args.experiment
    try:
        cfg = parse_config(args.config, overrides)
        t0 = time.perf_counter()
        result = run_campaign(cfg)
    except ConfigError as exc:
        print(f"neuroprune: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    wall = time.perf_counter() - t0
    csv_path, meta_path = write_outputs(result, cfg.out, wall)
    if not args.quiet:
        print(f"wrote {csv_path} ({len(result.rows)} rows) and {meta_path} in {wall:.1f} s")
        for key, val in result.summary.items():
            print(f"  {key}: {val}")
    if result.violations:
        for v in result.violations:
            print(f"neuroprune: invariant violation: {v}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
