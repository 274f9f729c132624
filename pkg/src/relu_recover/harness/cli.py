"""Command line entry point: ``relu-recover <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 numerical divergence, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

from ..teacher import dataset_csv
from .config import EXPERIMENTS, ConfigError, build_config, read_config_file
from .experiments import RUNNERS, make_dataset, run_train
from .plotting import emit_plot

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relu-recover",
                     description="Recover one-hidden-layer ReLU teacher networks by gradient descent.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="file of 'key = value' lines; flags override it")
        p.add_argument("--d", type=_int_list, help="input dimension(s), comma separated")
        p.add_argument("--k", dest="K", type=int, help="number of hidden neurons")
        p.add_argument("--n", dest="N", type=_int_list, help="sample size(s), comma separated")
        p.add_argument("--ratios", type=_float_list, help="N/d grid used when --n is not given")
        p.add_argument("--eta", type=float, help="step size")
        p.add_argument("--iters", dest="T", type=int, help="iteration budget")
        p.add_argument("--grad-tol", dest="grad_tol", type=float, help="early stop on ||grad||_F (0 = off)")
        p.add_argument("--record-every", dest="record_every", type=int)
        noise = p.add_mutually_exclusive_group()
        noise.add_argument("--nu", type=float, help="label noise standard deviation")
        noise.add_argument("--noise-var", type=float, help="label noise variance (sets nu = sqrt)")
        p.add_argument("--init", choices=("warm", "random", "both"))
        p.add_argument("--warm-radius", dest="warm_radius", type=float,
                       help="warm-start distance from W*, in units of sigma_K")
        p.add_argument("--sigma-min", dest="sigma_min", type=float)
        p.add_argument("--sigma-max", dest="sigma_max", type=float)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", dest="master_seed", type=int)
        p.add_argument("--out", dest="out_path", help="output CSV path (default: stdout)")
        p.add_argument("--plot", help="also write an SVG plot here")
        p.add_argument("--kind", choices=("line", "scatter"), default="line")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


_CONFIG_KEYS = ("d", "K", "N", "ratios", "eta", "T", "grad_tol", "record_every", "nu", "init",
                "warm_radius", "sigma_min", "sigma_max", "trials", "master_seed", "out_path")


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        overrides = {k: getattr(args, k) for k in _CONFIG_KEYS}
        if args.noise_var is not None:
            if args.noise_var < 0:
                raise ConfigError("noise variance must be nonnegative")
            overrides["nu"] = math.sqrt(args.noise_var)
        file_values = read_config_file(args.config) if args.config else None
        cfg = build_config(args.command, file_values, overrides)
    except (UsageError, ConfigError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"relu-recover: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    status = EXIT_OK
    try:
        if cfg.experiment == "gen-data":
            _, data = make_dataset(cfg)
            _emit(dataset_csv(data), cfg.out_path)
            return EXIT_OK
        if cfg.experiment == "train":
            table, bad = run_train(cfg)
            if bad is not None:
                print(f"relu-recover: diverged at iteration {bad}", file=sys.stderr)
                status = EXIT_DIVERGED
        else:
            table = RUNNERS[cfg.experiment](cfg)
        _emit(table.to_csv(), cfg.out_path)
        if args.plot:
            kind = args.kind
            if cfg.experiment == "check-theory":
                print("relu-recover: no plot layout for check-theory; skipped", file=sys.stderr)
            else:
                _emit(emit_plot(table, kind), args.plot)
    except OSError as exc:
        print(f"relu-recover: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"relu-recover: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
