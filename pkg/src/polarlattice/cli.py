"""Command-line front end: lattice design, rate curves, and WER simulation.

Exit codes: 0 success, 2 bad usage, 3 design infeasible, 4 I/O failure.
All stochastic output is fully determined by --seed; output files are
written atomically after the computation completes.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

from .decoders import SclConfig
from .design import DesignInfeasibleError, design_lattice, make_design, rate_curve
from .lattice import design_from_json, design_to_json
from .sim import SimPlan, run_wer, stats_to_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        directory = os.path.dirname(os.path.abspath(out))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, out)
    except OSError as e:
        raise IOError(f"cannot write {out}: {e}") from e


def _parse_floats(text: str, flag: str) -> list:
    try:
        values = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as e:
        raise UsageError(f"{flag}: expected comma-separated numbers, got {text!r}") from e
    if not values:
        raise UsageError(f"{flag}: empty list")
    return values


def _require_power_of_two(n: int) -> None:
    if n < 1 or (n & (n - 1)) != 0:
        raise UsageError(f"--n must be a power of two, got {n}")


def _cmd_design(args) -> int:
    _require_power_of_two(args.n)
    if not 0.0 < args.wer < 1.0:
        raise UsageError(f"--wer must be in (0, 1), got {args.wer}")
    if args.levels < 1:
        raise UsageError("--levels must be >= 1")
    if args.k is not None:
        k_values = [int(v) for v in args.k.split(",")]
        if len(k_values) not in (args.levels, args.levels + 1):
            raise UsageError(f"--k must list {args.levels} coded-level sizes")
        k_values = k_values[:args.levels]
        design = make_design(args.n, args.levels, k_values, args.wer,
                             decoder=args.decoder, crc_bits=args.crc,
                             list_size=args.list, ordering=args.ordering or "pw")
    else:
        design = design_lattice(args.n, args.levels, args.wer, decoder=args.decoder,
                                crc_bits=args.crc, list_size=args.list,
                                ordering=args.ordering, seed=args.seed,
                                mc_min_errors=args.mc_errors,
                                mc_max_trials=args.mc_trials)
    _write_output(design_to_json(design), args.out)
    return EXIT_OK


def _cmd_rate(args) -> int:
    _require_power_of_two(args.n)
    if not 0.0 < args.wer < 1.0:
        raise UsageError(f"--wer must be in (0, 1), got {args.wer}")
    if (args.sigma2 is None) == (args.snr_db is None):
        raise UsageError("exactly one of --sigma2 / --snr-db is required")
    if args.sigma2 is not None:
        grid = _parse_floats(args.sigma2, "--sigma2")
    else:
        grid = [10.0 ** (-db / 10.0) for db in _parse_floats(args.snr_db, "--snr-db")]
    grid = sorted(grid)
    method = "de" if args.decoder == "sc" else "mc"
    scl = SclConfig(args.list, args.crc) if method == "mc" else None
    curve = rate_curve(args.n, args.wer, grid, method=method, ordering=args.ordering,
                       scl=scl, seed=args.seed, mc_min_errors=args.mc_errors,
                       mc_max_trials=args.mc_trials)
    _write_output(curve.to_csv(), args.out)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    try:
        with open(args.design) as f:
            design = design_from_json(f.read())
    except OSError as e:
        raise IOError(f"cannot read design file {args.design}: {e}") from e
    except (ValueError, KeyError) as e:
        raise UsageError(f"invalid design file {args.design}: {e}") from e
    if (args.vnr_sweep is None) == (args.sigma2_sweep is None):
        raise UsageError("exactly one of --vnr-sweep / --sigma2-sweep is required")
    if args.vnr_sweep is not None:
        sweep, unit = _parse_floats(args.vnr_sweep, "--vnr-sweep"), "vnr_db"
    else:
        sweep, unit = _parse_floats(args.sigma2_sweep, "--sigma2-sweep"), "sigma2"
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    plan = SimPlan(design=design, sweep=tuple(sweep), sweep_unit=unit,
                   max_trials=args.trials, target_errors=args.target_errors,
                   seed=args.seed, batch_size=args.batch,
                   transmit_mode=args.mode, workers=args.workers)
    stats = run_wer(plan)
    _write_output(stats_to_csv(stats, timing=args.timing), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarlattice",
        description="Design and simulate multilevel lattices built from nested polar codes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="design a lattice and emit JSON")
    p_design.add_argument("--n", type=int, required=True)
    p_design.add_argument("--levels", type=int, default=2)
    p_design.add_argument("--wer", type=float, required=True)
    p_design.add_argument("--decoder", choices=("sc", "scl"), default="sc")
    p_design.add_argument("--crc", type=int, default=0)
    p_design.add_argument("--list", type=int, default=1)
    p_design.add_argument("--ordering", choices=("de", "pw"), default=None)
    p_design.add_argument("--k", type=str, default=None,
                          help="explicit comma-separated code sizes, skipping the search")
    p_design.add_argument("--mc-errors", type=int, default=100)
    p_design.add_argument("--mc-trials", type=int, default=200_000)
    p_design.add_argument("--seed", type=int, default=0)
    p_design.add_argument("--out", type=str, default=None)
    p_design.set_defaults(func=_cmd_design)

    p_rate = sub.add_parser("rate", help="achievable-rate curve as CSV")
    p_rate.add_argument("--n", type=int, required=True)
    p_rate.add_argument("--wer", type=float, required=True)
    p_rate.add_argument("--decoder", choices=("sc", "scl"), default="sc")
    p_rate.add_argument("--crc", type=int, default=0)
    p_rate.add_argument("--list", type=int, default=8)
    p_rate.add_argument("--ordering", choices=("de", "pw"), default=None)
    p_rate.add_argument("--sigma2", type=str, default=None,
                        help="comma-separated noise variances")
    p_rate.add_argument("--snr-db", type=str, default=None,
                        help="comma-separated 1/sigma2 values in dB")
    p_rate.add_argument("--mc-errors", type=int, default=100)
    p_rate.add_argument("--mc-trials", type=int, default=200_000)
    p_rate.add_argument("--seed", type=int, default=0)
    p_rate.add_argument("--out", type=str, default=None)
    p_rate.set_defaults(func=_cmd_rate)

    p_sim = sub.add_parser("simulate", help="Monte Carlo WER sweep of a design")
    p_sim.add_argument("--design", type=str, required=True, help="design JSON file")
    p_sim.add_argument("--vnr-sweep", type=str, default=None,
                       help="comma-separated VNR points in dB")
    p_sim.add_argument("--sigma2-sweep", type=str, default=None,
                       help="comma-separated noise variances")
    p_sim.add_argument("--trials", type=int, default=100_000)
    p_sim.add_argument("--target-errors", type=int, default=100)
    p_sim.add_argument("--mode", choices=("zero", "random"), default="zero")
    p_sim.add_argument("--batch", type=int, default=0)
    p_sim.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--timing", action="store_true",
                       help="write measured wall time into the seconds column")
    p_sim.add_argument("--out", type=str, default=None)
    p_sim.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError,) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DesignInfeasibleError as e:
        print(f"design infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except IOError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
