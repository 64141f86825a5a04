"""Command-line interface: fit, patterns, and simulate subcommands.

JSON is the canonical machine output; the aligned text table is display
only.  Exit codes: 0 success, 1 user or data error, 2 internal failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import _kernels
from .averaging import minimize_weights
from .baselines import fit_mim
from .data import load_csv, zero_fill
from .errors import CliError, McarAvgError
from .glm import family, fit_mle
from .patterns import build_candidates, patterns_summary
from .simulate import (
    DEFAULT_A_VALUES,
    DEFAULT_N_VALUES,
    SimConfig,
    format_table,
    run_grid,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}")


def _dump_json(obj, out_path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mcar-avg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_fit = sub.add_parser("fit", help="model-averaged fit of a CSV dataset")
    p_fit.add_argument("input", help="CSV file with a header row")
    p_fit.add_argument("--response", default="y", help="response column name")
    p_fit.add_argument("--family", default="bernoulli-logit")
    p_fit.add_argument("--na", default="NA", help="missing-value token")
    p_fit.add_argument("--lambda", dest="lambda_n", type=float, default=2.0)
    p_fit.add_argument("--out", default=None, help="write JSON here instead of stdout")

    p_pat = sub.add_parser("patterns", help="print column groups and candidates")
    p_pat.add_argument("input")
    p_pat.add_argument("--response", default="y")
    p_pat.add_argument("--na", default="NA")
    p_pat.add_argument("--out", default=None)

    p_sim = sub.add_parser("simulate", help="run the Monte Carlo study")
    p_sim.add_argument("--family", default="bernoulli-logit")
    p_sim.add_argument("--n", type=int, nargs="+", default=list(DEFAULT_N_VALUES))
    p_sim.add_argument("--a", type=float, nargs="+", default=list(DEFAULT_A_VALUES))
    p_sim.add_argument("--reps", type=int, default=1000)
    p_sim.add_argument("--seed", type=int, default=12345)
    p_sim.add_argument("--lambda", dest="lambda_n", type=float, default=2.0)
    p_sim.add_argument("--out", default=None, help="output path (.json or .csv)")
    p_sim.add_argument("--table", action="store_true", help="print the aligned table")
    p_sim.add_argument(
        "--threads",
        type=int,
        default=None,
        help="replication-level threads (default: MCAR_AVG_THREADS or 1)",
    )
    return parser


def cmd_fit(args) -> int:
    fam = family(args.family)
    d = load_csv(args.input, na_token=args.na, response_column=args.response)
    xtm = zero_fill(d)
    cands = build_candidates(d)
    fits = [fit_mle(fam, c, d) for c in cands]
    est = minimize_weights(fam, fits, xtm, d.y, args.lambda_n)
    payload = {
        "family": fam.name,
        "lambda_n": est.lambda_n,
        "weights": [float(w) for w in est.weights],
        "beta": [float(b) for b in est.beta],
        "criterion": est.criterion_value,
        "candidates": [
            {
                "id": f.candidate.id,
                "kind": f.candidate.kind,
                "k_s": f.candidate.k_s,
                "n_s": f.candidate.n_s,
                "converged": f.converged,
            }
            for f in fits
        ],
        "baselines": {
            "cc": {
                "beta": [float(b) for b in fits[0].beta_full],
                "converged": fits[0].converged,
            },
            "mim": {"beta": [float(b) for b in fit_mim(fam, d)]},
        },
        "warning": est.warning,
    }
    _dump_json(payload, args.out)
    return 0


def cmd_patterns(args) -> int:
    d = load_csv(args.input, na_token=args.na, response_column=args.response)
    _dump_json(patterns_summary(d), args.out)
    return 0


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("MCAR_AVG_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliError(f"MCAR_AVG_THREADS is not an integer: {env!r}") from None
    return 1


def _simulate_csv(results) -> str:
    lines = ["a,n,method,mean,median,sd,failures,replications"]
    for res in results:
        for m, s in ((m, res.summary(m)) for m in res.values):
            lines.append(
                f"{res.config.a!r},{res.config.n},{m},{s['mean']!r},{s['median']!r},"
                f"{s['sd']!r},{res.failures.get(m, 0)},{res.config.replications}"
            )
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    family(args.family)  # validate the name before any work
    threads = _resolve_threads(args)
    cfg = SimConfig(
        family=args.family,
        replications=args.reps,
        seed=args.seed,
        lambda_n=args.lambda_n,
    )
    results = run_grid(cfg, a_values=args.a, n_values=args.n, threads=threads)
    if args.out and args.out.endswith(".csv"):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(_simulate_csv(results))
    else:
        if len(results) == 1:
            payload = results[0].to_dict(include_values=True)
        else:
            payload = {
                "config": results[0].to_dict()["config"] | {"a": args.a, "n": args.n},
                "cells": [r.to_dict() for r in results],
            }
        if args.out or not args.table:
            _dump_json(payload, args.out)
    if args.table:
        sys.stdout.write(format_table(results) + "\n")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        np.seterr(over="ignore")  # poisson cumulant may saturate to inf harmlessly
        if args.subcommand == "fit":
            return cmd_fit(args)
        if args.subcommand == "patterns":
            return cmd_patterns(args)
        return cmd_simulate(args)
    except McarAvgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - internal invariant breach
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
