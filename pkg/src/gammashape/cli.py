"""Command-line entry point: fit, simulate, table, worst, cdf, mh-check."""
import argparse
import contextlib
import csv
import json
import math
import sys

import numpy as np

from .approx import AlgoConfig, approximate
from .errors import DomainError, NumericalError
from .harness import (
    A0_VALUES,
    N_VALUES,
    R_VALUES,
    GridCase,
    cdf_dump,
    format_iteration_table,
    iteration_table,
    read_csv,
    run_grid,
    worst_case,
    write_csv,
)
from .model import GammaParams, ShapePosterior, compute_stats
from .quadrature import QuadConfig, discrepancy
from .sampler import integrated_autocorr_time, make_rng, mc_standard_error, mh_chain


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"expected an unsigned 64-bit integer, got {text!r}")
    return v


def read_data(path):
    """Positive decimals, one per line; blank lines are skipped."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise DomainError(f"{path}:{lineno}: not a number: {line!r}")
    return np.array(values, dtype=float)


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _input(path):
    return sys.stdin if path == "-" else open(path, newline="")


def cmd_fit(args):
    data = read_data(args.data)
    fit = approximate(compute_stats(data, args.mu), GammaParams(args.a0, args.b0),
                      AlgoConfig(args.eps, args.max_iter))
    json.dump({"A": fit.A, "B": fit.B, "iterations": fit.iterations,
               "converged": fit.converged, "residual": fit.residual}, sys.stdout)
    print()


def cmd_simulate(args):
    results = run_grid(args.master_seed, AlgoConfig(args.eps, args.max_iter),
                       QuadConfig(args.quad_points), a0s=args.a0, ns=args.n, rs=args.r,
                       replicates=args.replicates, workers=args.workers)
    with _output(args.out) as fh:
        write_csv(results, fh)
    bad = sum(1 for r in results if not r.ok)
    if bad:
        print(f"{bad} of {len(results)} runs failed; see the status column", file=sys.stderr)


def cmd_table(args):
    with _input(args.inp) as fh:
        records = read_csv(fh)
    table = iteration_table(records)
    if args.csv:
        w = csv.writer(sys.stdout, lineterminator="\n")
        cols = list(table)
        w.writerow(["iterations"] + [repr(a0) for a0 in cols])
        for k in next(iter(table.values())):
            w.writerow([k] + [table[a0][k] for a0 in cols])
    else:
        print(format_iteration_table(table))


def cmd_worst(args):
    with _input(args.inp) as fh:
        rows = worst_case(read_csv(fh))
    w = csv.writer(sys.stdout, lineterminator="\n")
    fields = ("a0", "n", "tv", "kl_fg", "kl_gf", "combos")
    w.writerow(fields)
    for row in rows:
        w.writerow([repr(row[f]) if isinstance(row[f], float) else row[f] for f in fields])


def cmd_cdf(args):
    case = GridCase.make(args.n, args.r, args.a_true, args.mu_true, args.a0,
                         args.replicate, args.master_seed)
    grid, true_cdf, approx_cdf = cdf_dump(case, AlgoConfig(), QuadConfig(args.quad_points),
                                          args.points)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("a", "true_cdf", "approx_cdf"))
        for row in zip(grid.tolist(), true_cdf.tolist(), approx_cdf.tolist()):
            w.writerow([repr(v) for v in row])


def cmd_mh_check(args):
    if args.steps < 1:
        raise DomainError("steps must be at least 1")
    data = read_data(args.data)
    stats = compute_stats(data, args.mu)
    prior = GammaParams(args.a0, args.b0)
    fit = approximate(stats, prior)
    rng = make_rng(args.seed)
    chain, accepts = mh_chain(rng, fit.params.mean, stats, prior, args.steps)
    report = discrepancy(ShapePosterior(stats, prior, args.mu), fit.params,
                         QuadConfig(args.quad_points))
    out = {
        "steps": args.steps,
        "acceptance_rate": accepts / args.steps,
        "chain_mean": float(np.mean(chain)),
        "chain_var": float(np.var(chain)),
        "chain_mean_se": mc_standard_error(chain),
        "autocorr_time": integrated_autocorr_time(chain),
        "quad_mean": report.mean_f,
        "quad_var": report.var_f,
        "A": fit.A,
        "B": fit.B,
    }
    json.dump(out, sys.stdout)
    print()


def build_parser():
    p = argparse.ArgumentParser(prog="gammashape",
                                description="Gamma approximation to the full conditional of a gamma shape.")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit Gamma(A, B) to the shape's full conditional")
    f.add_argument("--data", required=True, help="text file, one positive number per line")
    f.add_argument("--mu", type=float, required=True)
    f.add_argument("--a0", type=float, required=True)
    f.add_argument("--b0", type=float, required=True)
    f.add_argument("--eps", type=float, default=1e-8)
    f.add_argument("--max-iter", type=int, default=10)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="run the simulation grid and write CSV")
    s.add_argument("--a0", type=_float_list, default=list(A0_VALUES))
    s.add_argument("--n", type=_int_list, default=list(N_VALUES))
    s.add_argument("--r", type=_float_list, default=list(R_VALUES))
    s.add_argument("--master-seed", type=_u64, default=0)
    s.add_argument("--quad-points", type=int, default=100_000)
    s.add_argument("--replicates", type=int, default=5)
    s.add_argument("--eps", type=float, default=1e-8)
    s.add_argument("--max-iter", type=int, default=10)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default=None, help="output CSV (default stdout)")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("table", help="iteration-count histogram per a0")
    t.add_argument("--in", dest="inp", required=True)
    t.add_argument("--csv", action="store_true", help="emit CSV instead of aligned text")
    t.set_defaults(func=cmd_table)

    w = sub.add_parser("worst", help="per-(a0, n) maxima of replicate-averaged discrepancies")
    w.add_argument("--in", dest="inp", required=True)
    w.set_defaults(func=cmd_worst)

    c = sub.add_parser("cdf", help="true and approximate CDFs for one simulated case")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--r", type=float, required=True)
    c.add_argument("--a-true", type=float, required=True)
    c.add_argument("--mu-true", type=float, required=True)
    c.add_argument("--a0", type=float, required=True)
    c.add_argument("--points", type=int, default=512)
    c.add_argument("--replicate", type=int, default=1)
    c.add_argument("--master-seed", type=_u64, default=0)
    c.add_argument("--quad-points", type=int, default=100_000)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_cdf)

    m = sub.add_parser("mh-check", help="independence MH chain vs quadrature moments")
    m.add_argument("--data", required=True)
    m.add_argument("--mu", type=float, required=True)
    m.add_argument("--a0", type=float, required=True)
    m.add_argument("--b0", type=float, required=True)
    m.add_argument("--steps", type=_u64, required=True)
    m.add_argument("--seed", type=_u64, required=True)
    m.add_argument("--quad-points", type=int, default=100_000)
    m.set_defaults(func=cmd_mh_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (DomainError, NumericalError, OSError) as exc:
        print(f"gammashape {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
