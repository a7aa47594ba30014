"""Command-line front end: simulate instances, align covariance pairs, run
sweeps, verify the lemma suites.

stdout carries data (result JSON, the sweep aggregate table, the verify
table); stderr carries progress and error messages, so output can be piped
into analysis scripts.  Exit codes: 0 success, 1 runtime failure (solver
error, failed verify suite), 2 usage, file-format, or config errors.  The
environment variable COVALIGN_SEED, when set, overrides the seed from flags
and config files in every subcommand.

Sweep config JSON schema (grid cells are product(kinds, d, m-choices, n);
omit "m" to tie m = n per n entry)::

    {
      "kinds": ["wishart"],
      "d": [8, 16],
      "n": [100, 1000],
      "m": [100],
      "estimators": ["gw", {"name": "qmle-local", "ridge": 0.1}],
      "replicates": 3,
      "base_seed": 7,
      "gamma": 0.5,
      "normalize": "none",
      "c1": 3.0,
      "c5": 0.5,
      "out": "results.csv"
    }

Estimator options mirror the library dataclasses: gw takes GwOptions fields
(epsilon, anneal, ...), qmle-local/qmle-exhaustive take SearchOptions fields
(restarts, ridge, ...), spectral takes {"two_sided": bool}.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .errors import CovalignError, FileFormatError
from .gw import GwOptions, gw_estimate
from .harness import run_sweep, sweep_config_from_json
from .instances import InstanceSpec, make_instance
from .io import (
    read_matrix_csv,
    read_meta_json,
    result_document,
    write_matrix_csv,
    write_meta_json,
)
from .model import EXACT, frob_loss, hamming_loss, nf_loss, qap_objective
from .search import SearchOptions, qmle_estimate
from .spectral import spectral_estimate
from .verify import format_report, verify_lemmas

__all__ = ["main"]


def _size(text: str) -> int | str:
    if text == EXACT:
        return EXACT
    value = int(text)
    if value < 1:
        raise ValueError("sample sizes are positive")
    return value


def _env_seed(default: int) -> int:
    raw = os.environ.get("COVALIGN_SEED")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise FileFormatError(f"COVALIGN_SEED={raw!r} is not an integer") from exc


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = InstanceSpec(
        kind=args.kind,
        d=args.d,
        gamma=args.gamma,
        m=args.m,
        n=args.n,
        normalize=args.normalize,
        seed=_env_seed(args.seed),
    )
    try:
        spec.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    instance = make_instance(spec)
    os.makedirs(args.out, exist_ok=True)
    write_matrix_csv(os.path.join(args.out, "sigma.csv"), instance.sigma)
    write_matrix_csv(os.path.join(args.out, "sigma_hat_x.csv"), instance.sigma_hat_x)
    write_matrix_csv(os.path.join(args.out, "sigma_hat_y.csv"), instance.sigma_hat_y)
    write_meta_json(
        os.path.join(args.out, "meta.json"), spec, instance.pi_star, "sigma.csv"
    )
    for name in ("sigma.csv", "sigma_hat_x.csv", "sigma_hat_y.csv", "meta.json"):
        print(f"wrote {os.path.join(args.out, name)}", file=sys.stderr)
    return 0


def _align_once(args: argparse.Namespace, x, y):
    """Returns (permutation, objective, iterations, converged)."""
    if args.estimator == "gw":
        rep = gw_estimate(x, y, GwOptions(epsilon=args.eps))
        return rep.permutation, rep.objective_rounded, rep.outer_iterations, rep.converged
    if args.estimator == "qmle":
        opts = SearchOptions(mode="local", restarts=args.restarts, ridge=args.ridge)
        rep = qmle_estimate(x, y, opts)
        return rep.permutation, rep.objective, rep.evaluations, rep.converged
    pi = spectral_estimate(x, y)
    return pi, qap_objective(x, y, pi), 0, True


def cmd_align(args: argparse.Namespace) -> int:
    x = read_matrix_csv(args.x)
    y = read_matrix_csv(args.y)
    if x.shape != y.shape:
        raise FileFormatError(
            f"{args.x} is {x.shape[0]}x{x.shape[0]} but {args.y} is "
            f"{y.shape[0]}x{y.shape[0]}"
        )
    truth = None
    if args.truth is not None:
        spec, pi_star, sigma_path = read_meta_json(args.truth)
        truth = (read_matrix_csv(sigma_path), pi_star)
    start = time.perf_counter()
    try:
        pi, objective, iterations, converged = _align_once(args, x, y)
    except CovalignError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stdout,
        )
        return 1
    runtime_ms = (time.perf_counter() - start) * 1e3
    losses = None
    if truth is not None:
        sigma, pi_star = truth
        fl = frob_loss(sigma, pi, pi_star)
        try:
            nf = nf_loss(sigma, pi, pi_star)
            nf_sq: float | None = nf * nf
        except CovalignError:
            nf_sq = None  # singular truth: the metric is undefined there
        losses = {
            "frobenius_sq": fl * fl,
            "nf_sq": nf_sq,
            "hamming": hamming_loss(pi, pi_star),
        }
    doc = result_document(
        estimator=args.estimator,
        permutation=pi,
        objective=objective,
        diagnostics={
            "iterations": int(iterations),
            "converged": bool(converged),
            "runtime_ms": runtime_ms,
        },
        losses=losses,
    )
    print(json.dumps(doc, indent=2))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        with open(args.config, "r", encoding="ascii") as fh:
            doc = json.load(fh)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
        return 2
    try:
        config = sweep_config_from_json(doc, out=args.out, jobs=args.jobs)
    except FileFormatError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return 2
    seed_override = os.environ.get("COVALIGN_SEED")
    if seed_override is not None:
        from dataclasses import replace

        config = replace(config, base_seed=_env_seed(config.base_seed))
    _, table = run_sweep(config, progress=lambda line: print(line, file=sys.stderr))
    columns = (
        "kind", "estimator", "d", "m", "n", "count", "failures",
        "mean_frob_loss_sq", "median_frob_loss_sq", "stderr_frob_loss_sq",
    )
    print(",".join(columns))
    for row in table:
        print(",".join(str(row[c]) for c in columns))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    counts = None
    if args.counts is not None:
        if args.counts < 1:
            print("error: --counts must be >= 1", file=sys.stderr)
            return 2
        counts = {
            "trace-frobenius": args.counts,
            "sandwich": args.counts,
            "quadratic": args.counts,
            "perm-algebra": args.counts,
        }
    report = verify_lemmas(_env_seed(args.seed), counts)
    print(format_report(report))
    return 0 if report.ok else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covalign",
        description="align the feature orderings of two Gaussian datasets "
        "by matching covariance structure",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate an instance to files")
    sim.add_argument("--kind", required=True, choices=("robinson", "wishart", "hard"))
    sim.add_argument("--d", required=True, type=int)
    sim.add_argument("--gamma", type=float, default=1.0)
    sim.add_argument("--m", type=_size, default=EXACT, help="int or 'exact'")
    sim.add_argument("--n", type=_size, default=EXACT, help="int or 'exact'")
    sim.add_argument("--normalize", choices=("none", "opnorm", "trace"), default="none")
    sim.add_argument("--seed", required=True, type=int)
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=cmd_simulate)

    al = sub.add_parser("align", help="estimate the permutation between two "
                        "covariance CSV files")
    al.add_argument("--x", required=True)
    al.add_argument("--y", required=True)
    al.add_argument("--estimator", required=True, choices=("gw", "qmle", "spectral"))
    al.add_argument("--eps", type=float, default=None, help="gw temperature "
                    "(default 1/d^2)")
    al.add_argument("--ridge", type=float, default=0.0)
    al.add_argument("--restarts", type=int, default=16)
    al.add_argument("--truth", default=None, help="meta.json from simulate; "
                    "adds the losses block")
    al.set_defaults(func=cmd_align)

    sw = sub.add_parser("sweep", help="run a sweep config to a results CSV")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sw.set_defaults(func=cmd_sweep)

    ver = sub.add_parser("verify", help="run the lemma property suites")
    ver.add_argument("--counts", type=int, default=None,
                     help="override draws for the Monte Carlo suites")
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CovalignError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
