"""Command-line entry point: ``psarnoise {figure,simulate,selftest}``.

Exit codes: 0 success, 1 usage error, 2 numerical check failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness
from .channel import NoiseKind, NoiseModel

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _grid(value: str):
    try:
        return harness.parse_grid(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psarnoise", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fig = sub.add_parser("figure", help="emit figure data as CSV")
    figsub = fig.add_subparsers(dest="figure", required=True, parser_class=_Parser)
    succ = figsub.add_parser("success", help="success probability vs q")
    succ.add_argument("--n", type=int, action="append", help="number of uses (repeatable); default 1 3 7 15")
    succ.add_argument("--grid-q", type=_grid, help="q grid start:step:end (default 0:0.1:1)")
    succ.add_argument("--out", help="output path (default stdout)")
    nmap = figsub.add_parser("noise-map", help="retrieved noise parameter q' vs q")
    nmap.add_argument("--grid-q", type=_grid, help="q grid start:step:end (default 0:0.1:1)")
    nmap.add_argument("--out", help="output path (default stdout)")
    for p in (succ, nmap):
        p.add_argument("--format", choices=["csv"], default="csv")

    sim = sub.add_parser("simulate", help="run one scheme and report")
    sim.add_argument("scheme", choices=["psar", "vmc", "vq"])
    sim.add_argument("--noise", choices=[k.value for k in NoiseKind], required=True)
    sim.add_argument("--q", type=float, required=True)
    phi = sim.add_mutually_exclusive_group()
    phi.add_argument("--phi", type=float, help="phase in radians (default 0)")
    phi.add_argument("--phi-degrees", type=float, help="phase in degrees")
    sim.add_argument("--n", type=int, help="number of uses (psar, vq)")
    sim.add_argument("--k", type=int, help="number of rounds (vmc)")
    sim.add_argument("--format", choices=["json", "csv"], default="json")
    sim.add_argument("--out", help="output path (default stdout)")

    st = sub.add_parser("selftest", help="run the invariant sweep")
    st.add_argument("--n", type=int, help="largest number of uses in the sweep (default 5)")
    st.add_argument("--grid-q", type=_grid, help="q grid start:step:end (default 0:0.1:1)")
    return parser


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def _run(args) -> int:
    if args.command == "figure":
        if args.figure == "success":
            n_list = args.n or list(harness.DEFAULT_N_LIST)
            if any(n < 1 for n in n_list):
                raise UsageError("--n must be positive")
            header, rows = harness.figure_success(n_list, args.grid_q)
        else:
            header, rows = harness.figure_noise_map(args.grid_q)
        _emit(harness.to_csv(header, rows), args.out)
        return EXIT_OK

    if args.command == "simulate":
        phi = np.deg2rad(args.phi_degrees) if args.phi_degrees is not None else (args.phi or 0.0)
        try:
            noise = NoiseModel(NoiseKind(args.noise), args.q)
            report = harness.simulate(args.scheme, noise, float(phi), n=args.n, k=args.k)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        text = harness.simulate_json(report) if args.format == "json" else harness.simulate_csv(report)
        _emit(text, args.out)
        return EXIT_OK

    cfg = harness.SelfTestConfig()
    if args.n is not None:
        if not 1 <= args.n <= 10:
            raise UsageError("--n must lie in [1, 10]")
        cfg.n_max = args.n
    cfg.q_grid = args.grid_q
    results = harness.run_selftest(cfg)
    sys.stdout.write(harness.format_selftest(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"psarnoise: error: {exc}\n")
        return EXIT_USAGE
    except harness.NumericalCheckFailed as exc:
        sys.stderr.write(f"psarnoise: numerical check failed: {exc}\n")
        return EXIT_NUMERIC
    except OSError as exc:
        sys.stderr.write(f"psarnoise: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
