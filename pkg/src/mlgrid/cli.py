"""Command line interface.

Exit codes: 0 success, 1 identity failure, 2 schema or usage error,
3 domain error, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import pathlib
import sys

from mlgrid import identities
from mlgrid.errors import DomainError, NoConvergence
from mlgrid.formats import (
    Problem,
    SchemaError,
    dump_json,
    fmt,
    write_csv,
    write_function,
)
from mlgrid.operators import apply
from mlgrid.special import SeriesControl, ml_series
from mlgrid.variational import solve_direct

log = logging.getLogger("mlgrid")

EXIT_OK = 0
EXIT_IDENTITY = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_CONVERGENCE = 4


class UsageError(Exception):
    pass


def _outdir(path) -> pathlib.Path | None:
    if path is None:
        return None
    out = pathlib.Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# {{{ commands


def cmd_eval(args) -> int:
    problem = Problem.load(args.problem)
    spec = problem.operator()
    if args.tol is not None:
        spec = spec.replace(ctrl=dataclasses.replace(spec.ctrl, rel_tol=args.tol))
    result = apply(spec, problem.function("f"))
    write_function(args.out, result)
    return EXIT_OK


def cmd_ml(args) -> int:
    ctrl = SeriesControl()
    if args.tol is not None:
        ctrl = dataclasses.replace(ctrl, rel_tol=args.tol)
    if args.k_max is not None:
        ctrl = dataclasses.replace(ctrl, k_max=args.k_max)
    if args.z_max < 1:
        raise UsageError("--z-max must be at least 1")
    values, terms = ml_series(args.alpha, args.beta, args.lam, args.z_max, ctrl)
    rows = [(z + 1, float(values[z]), int(terms[z])) for z in range(args.z_max)]
    write_csv(args.out, ("z", "value", "terms"), rows)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.trials < 1:
        raise UsageError(f"--trials must be at least 1, got {args.trials}")
    if not 2 <= args.n_min <= args.n_max:
        raise UsageError("need 2 <= --n-min <= --n-max")
    if args.identity == "all":
        ids = identities.IDENTITIES
    elif args.identity in identities.IDENTITIES:
        ids = (args.identity,)
    else:
        raise UsageError(
            f"unknown identity {args.identity!r}; choose 'all' or one of "
            + ", ".join(identities.IDENTITIES)
        )

    threshold = identities.DEFAULT_THRESHOLD if args.tol is None else args.tol
    results = [
        identities.fuzz(
            i, trials=args.trials, seed=args.seed,
            n_range=(args.n_min, args.n_max), threshold=threshold,
        )
        for i in ids
    ]

    passed = all(r.passed for r in results)
    summary = {
        "max_rel_residual": max(r.max_rel_residual for r in results),
        "trials": args.trials,
        "seed": args.seed,
        "n_range": [args.n_min, args.n_max],
        "threshold": threshold,
        "pass": passed,
        "identities": [r.summary() for r in results],
    }

    out = _outdir(args.out)
    if out is not None:
        header = (
            "identity_id", "trial_index", "trial_seed", "normalization", "grid_size",
            "a", "lhs", "rhs", "abs_residual", "rel_residual",
        )
        rows = [
            tuple(rep.as_row()[h] for h in header)
            for r in results
            for rep in r.reports
        ]
        write_csv(out / "reports.csv", header, rows)
        dump_json(out / "summary.json", summary)
    elif not args.quiet:
        dump_json(None, summary)

    for r in results:
        for bad in r.failures:
            print(
                f"FAIL {bad.identity_id}: rel_residual={fmt(bad.rel_residual)} "
                f"replay with --seed {bad.trial_seed} (trial {bad.trial_index}, "
                f"normalization {bad.normalization}, n={bad.grid_size})",
                file=sys.stderr,
            )
    return EXIT_OK if passed else EXIT_IDENTITY


def cmd_solve(args) -> int:
    problem = Problem.load(args.problem)
    p = problem.variational()
    opts = problem.solver_options()
    if args.tol is not None:
        opts["grad_tol"] = args.tol
    sol = solve_direct(p, **opts)

    summary = {
        "J": sol.J_value,
        "max_abs_residual": sol.max_abs_residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "gradient_norm": sol.gradient_norm,
        "method": sol.method,
    }
    out = _outdir(args.out)
    if out is not None:
        write_function(out / "solution.csv", sol.f)
        write_function(out / "residual.csv", sol.el_residual)
        dump_json(out / "summary.json", summary)
    elif not args.quiet:
        write_function(None, sol.f)
        dump_json(None, summary)
    return EXIT_OK if sol.converged else EXIT_CONVERGENCE


# }}}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (eval, ml) or directory (verify, solve)")
    common.add_argument("--tol", type=float, help="series rel_tol (eval, ml), "
                        "residual threshold (verify) or gradient tolerance (solve)")
    common.add_argument("--quiet", action="store_true", help="only report errors")

    parser = argparse.ArgumentParser(
        prog="mlgrid",
        description="Variable-order nabla fractional operators with Mittag-Leffler kernels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="apply an operator to a grid function")
    p.add_argument("problem", help="JSON problem file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ml", parents=[common], help="tabulate the Mittag-Leffler function")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--z-max", type=int, required=True)
    p.add_argument("--k-max", type=int, default=None)
    p.set_defaults(func=cmd_ml)

    p = sub.add_parser("verify", parents=[common], help="fuzz the summation-by-parts identities")
    p.add_argument("identity", help="identity id or 'all'")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=12)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("solve", parents=[common], help="solve a variational problem")
    p.add_argument("problem", help="JSON problem file")
    p.set_defaults(func=cmd_solve)
    return parser


def _configure_logging(quiet: bool) -> None:
    level = os.environ.get("MLGRID_LOG", "WARNING").upper()
    if quiet:
        level = "ERROR"
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.quiet)

    try:
        return args.func(args)
    except (SchemaError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
