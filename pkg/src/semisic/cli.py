"""Command-line front end.

Exit codes: 0 success / certification passed, 1 certification failed,
2 usage error (bad flags or B outside (1/16, 1/12]). Set ``SEMISIC_LOG`` to
``quiet``, ``info`` or ``debug`` for stderr verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from ._jsonio import csv_text, write_json, write_text
from .bloch import gram
from .errors import OutOfRangeError, SemiSicError
from .optimizer import seesaw
from .oracle import mu_grid_scan, random_search_max, verify_mean_bound
from .povm import (
    SemiSicParams,
    build_semi_sic,
    check_B,
    disphenoid_edges,
    is_extremal_four_outcome,
    pairwise_trace_products,
    semi_sic_gram,
)
from .selftest import run_full_certification
from .witness import WitnessSpec, c_params_from_B, q_of_b, q_prime

log = logging.getLogger("semisic")

_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


def _configure_logging() -> None:
    level = _LEVELS.get(os.environ.get("SEMISIC_LOG", "quiet").lower(), logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _positive_int(name: str, value: int) -> int:
    if value < 1:
        raise UsageError(f"--{name} must be >= 1, got {value}")
    return value


def cmd_construct(args) -> int:
    povm = build_semi_sic(args.B)
    params = SemiSicParams.from_B(args.B)
    edges = disphenoid_edges(povm)
    extremal = is_extremal_four_outcome(povm)
    doc = povm.to_dict()
    doc.update(
        {
            "B": params.B,
            "params": params.as_dict(),
            "edge_lengths": {f"{i + 1}{j + 1}": length for (i, j), length in edges.lengths.items()},
            "opposite_edge_dot": edges.opposite_dot,
            "pairwise_trace_products": pairwise_trace_products(povm).tolist(),
            "extremal": extremal.is_extremal,
            "min_triple_det": extremal.min_abs_det,
        }
    )
    write_json(doc, args.out)
    return 0


def cmd_certify(args) -> int:
    _positive_int("restarts", args.restarts)
    if args.tol <= 0 or args.k < 0:
        raise UsageError("--tol must be positive and --k non-negative")
    check_B(args.B)
    report = run_full_certification(args.B, seed=args.seed, restarts=args.restarts, k=args.k, tol=args.tol, workers=args.workers)
    write_json(report.to_dict(), args.out)
    if args.summary:
        sys.stderr.write(report.summary())
    return 0 if report.passed else 1


def cmd_sweep(args) -> int:
    steps = _positive_int("steps", args.steps)
    lo, hi = check_B(args.B_min), check_B(args.B_max)
    if lo > hi:
        raise UsageError("--B-min must not exceed --B-max")
    rows = []
    for B in np.linspace(lo, hi, steps):
        c1, c2 = c_params_from_B(B)
        result = seesaw(WitnessSpec(c1, c2), seed=args.seed, restarts=args.restarts)
        gram_res = float(np.abs(gram(result.strategy.states) - semi_sic_gram(B)).max())
        rows.append([B, c1, c2, q_of_b(B), result.value, q_prime(c1, c2), gram_res])
        log.info("B=%.12g Q=%.15g seesaw=%.15g", B, rows[-1][3], result.value)
    write_text(csv_text(["B", "c1", "c2", "Q_analytic", "Q_seesaw", "Q_prime", "gram_residual"], rows), args.out)
    return 0


def cmd_oracle(args) -> int:
    _positive_int("samples", args.samples)
    _positive_int("trials", args.trials)
    if args.grid_n < 3:
        raise UsageError("--grid-n must be >= 3")
    spec = WitnessSpec.from_B(args.B)
    best = random_search_max(spec, samples=args.samples, seed=args.seed)
    scan = mu_grid_scan(spec, grid_n=args.grid_n, seed=args.seed)
    bound = verify_mean_bound(spec, trials=args.trials, seed=args.seed)
    doc = {
        "B": check_B(args.B),
        "c1": spec.c1,
        "c2": spec.c2,
        "Q_analytic": q_of_b(args.B),
        "Q_prime": q_prime(spec.c1, spec.c2),
        "random_search": {
            "samples": args.samples,
            "seed": args.seed,
            "best_value": best.value,
            "mus": best.mus.tolist(),
            "states": best.states.tolist(),
            "directions": best.directions.tolist(),
        },
        "mu_grid": {"mu1": scan.mu1.tolist(), "max_W": scan.max_W.tolist(), "argmax": scan.argmax},
        "mean_bound": {"trials": bound.trials, "worst_slack": bound.worst_slack, "holds": bound.holds},
    }
    write_json(doc, args.out)
    if args.csv:
        write_text(scan.to_csv(), args.csv)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semisic", description="Semi-SIC POVM construction, witness maximization and self-testing.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build the semi-SIC POVM for a given B")
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--out", help="output JSON path (stdout when omitted)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("certify", help="run the full self-testing pipeline")
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--k", type=float, default=1.0, help="penalty on the fourth-setting probabilities")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--summary", action="store_true", help="also print a text summary to stderr")
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sweep", help="closed forms against see-saw over a range of B (CSV)")
    p.add_argument("--B-min", dest="B_min", type=float, required=True)
    p.add_argument("--B-max", dest="B_max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="brute-force checks: random search, mu grid, mean bound")
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-n", dest="grid_n", type=int, default=21)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--out", help="output JSON path (stdout when omitted)")
    p.add_argument("--csv", help="also write the mu grid curve as CSV")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, OutOfRangeError) as exc:
        sys.stderr.write(f"semisic: error: {exc}\n")
        return 2
    except SemiSicError as exc:
        sys.stderr.write(f"semisic: certification failed: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
