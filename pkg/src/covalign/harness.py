"""Experiment orchestration: timed single trials, Cartesian parameter
sweeps with a crash-resumable CSV, and the sample-size threshold search
behind the scaling-law experiment.

Every trial owns an independent rng stream derived from
``mix64(base_seed, grid_index, replicate)``, so results do not depend on
execution order or on how many workers ran the sweep.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from typing import Callable

import numpy as np

from . import linalg
from .errors import BudgetExceeded, CovalignError, FileFormatError, InvalidInput, NotPositiveDefinite
from .gw import GwOptions, gw_estimate
from .instances import InstanceSpec, make_instance
from .io import TRIAL_COLUMNS, format_float
from .model import (
    EXACT,
    AlignmentInstance,
    frob_loss,
    hamming_loss,
    nf_loss,
    qap_objective,
    trace_loss,
)
from .search import SearchOptions, exhaustive_search, qmle_estimate
from .spectral import spectral_estimate

__all__ = [
    "ESTIMATORS",
    "TrialRecord",
    "SweepConfig",
    "ThresholdConfig",
    "mix64",
    "run_trial",
    "run_sweep",
    "sweep_config_from_json",
    "threshold_search",
]

#: estimator names run_trial understands.
ESTIMATORS = ("gw", "qmle-local", "qmle-exhaustive", "gw-exhaustive", "spectral")

_MASK = (1 << 64) - 1


def mix64(base_seed: int, grid_index: int, replicate: int) -> int:
    """Stream seed for one trial: splitmix64 finalizer folded over the
    three coordinates.

    Each part is absorbed with the golden-ratio increment and run through
    the full avalanche, so neighboring (base_seed, grid_index, replicate)
    triples land on unrelated 64-bit seeds; collisions across a whole sweep
    grid are checked in tests.
    """
    acc = 0
    for part in (base_seed, grid_index, replicate):
        acc = (acc + 0x9E3779B97F4A7C15 + (int(part) & _MASK)) & _MASK
        acc ^= acc >> 30
        acc = (acc * 0xBF58476D1CE4E5B9) & _MASK
        acc ^= acc >> 27
        acc = (acc * 0x94D049BB133111EB) & _MASK
        acc ^= acc >> 31
    return acc


@dataclass(frozen=True)
class TrialRecord:
    """One estimator run on one instance, scored against the truth.

    ``status`` is "ok" or the name of the error that stopped the run; a
    failed trial keeps NaN losses and hamming = d so sweeps survive
    individual solver failures without hiding them.
    """

    estimator: str
    d: int
    m: int | str
    n: int | str
    seed: int
    epsilon: float | None
    frob_loss_sq: float
    nf_loss_sq: float
    trace_loss: float
    hamming: int
    objective: float
    iterations: int
    converged: bool
    runtime_ms: float
    thread_count: int = 1
    status: str = "ok"


def _dispatch(instance: AlignmentInstance, estimator: str, options):
    """Run one estimator; returns (pi, objective, iterations, converged).

    The objective is the estimator's own criterion value for the qmle
    variants and the common covariance-matching objective
    ``<Sigma_hat_X^pi, Sigma_hat_Y>`` for gw, gw-exhaustive, and spectral,
    so records from those three are directly comparable.
    """
    x, y = instance.sigma_hat_x, instance.sigma_hat_y
    if estimator == "gw":
        rep = gw_estimate(x, y, options)
        return rep.permutation, rep.objective_rounded, rep.outer_iterations, rep.converged
    if estimator == "qmle-local":
        opts = replace(options or SearchOptions(), mode="local")
        rep = qmle_estimate(x, y, opts)
        return rep.permutation, rep.objective, rep.evaluations, rep.converged
    if estimator == "qmle-exhaustive":
        opts = replace(options or SearchOptions(), mode="exhaustive")
        rep = qmle_estimate(x, y, opts)
        return rep.permutation, rep.objective, rep.evaluations, rep.converged
    if estimator == "gw-exhaustive":
        rep = exhaustive_search(x, y, "max")
        return rep.permutation, rep.objective, rep.evaluations, rep.converged
    if estimator == "spectral":
        two_sided = True if options is None else bool(options.get("two_sided", True))
        pi = spectral_estimate(x, y, two_sided=two_sided)
        return pi, qap_objective(x, y, pi), 0, True
    raise InvalidInput(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")


def _resolved_epsilon(instance: AlignmentInstance, estimator: str, options) -> float | None:
    if estimator != "gw":
        return None
    return (options or GwOptions()).resolve_epsilon(instance.d)


def run_trial(instance: AlignmentInstance, estimator: str, options=None,
              thread_count: int = 1) -> TrialRecord:
    """Run one estimator on one instance and score it against (sigma, pi_star).

    Solver failures (a stalled projection, a singular covariance handed to
    the likelihood estimator, an oversized exhaustive request) become a
    record with ``status`` naming the error; only caller mistakes raise.
    Records are reproducible bit-for-bit except ``runtime_ms``.
    """
    epsilon = _resolved_epsilon(instance, estimator, options)
    start = time.perf_counter()
    try:
        pi, objective, iterations, converged = _dispatch(instance, estimator, options)
    except CovalignError as exc:
        runtime_ms = (time.perf_counter() - start) * 1e3
        return TrialRecord(
            estimator=estimator,
            d=instance.d,
            m=instance.m,
            n=instance.n,
            seed=instance.seed,
            epsilon=epsilon,
            frob_loss_sq=math.nan,
            nf_loss_sq=math.nan,
            trace_loss=math.nan,
            hamming=instance.d,
            objective=math.nan,
            iterations=0,
            converged=False,
            runtime_ms=runtime_ms,
            thread_count=thread_count,
            status=type(exc).__name__,
        )
    runtime_ms = (time.perf_counter() - start) * 1e3
    sigma, pi_star = instance.sigma, instance.pi_star
    fl = frob_loss(sigma, pi, pi_star)
    try:
        nf = nf_loss(sigma, pi, pi_star)
        nf_sq = nf * nf
    except NotPositiveDefinite:
        nf_sq = math.nan
    # likelihood diagnostic on the truth-aligned covariance: the relative
    # permutation pi_star^-1 o pi vanishes exactly when pi hits the truth
    rho = linalg.perm_compose(linalg.perm_invert(pi_star), np.asarray(pi))
    try:
        tl = trace_loss(linalg.perm_apply(sigma, pi_star), rho)
    except NotPositiveDefinite:
        tl = math.nan
    return TrialRecord(
        estimator=estimator,
        d=instance.d,
        m=instance.m,
        n=instance.n,
        seed=instance.seed,
        epsilon=epsilon,
        frob_loss_sq=fl * fl,
        nf_loss_sq=nf_sq,
        trace_loss=tl,
        hamming=hamming_loss(pi, pi_star),
        objective=float(objective),
        iterations=int(iterations),
        converged=bool(converged),
        runtime_ms=runtime_ms,
        thread_count=thread_count,
        status="ok",
    )


@dataclass(frozen=True)
class SweepConfig:
    """Cartesian experiment grid.

    Cells are product(kinds, d, m-choices, n); ``m=None`` ties m = n per n
    entry.  Replicate r of grid cell g runs on the instance seeded
    ``mix64(base_seed, g, r)``, shared by every estimator in that cell so
    estimators are compared on identical data.
    """

    kinds: tuple[str, ...]
    d: tuple[int, ...]
    n: tuple[int | str, ...]
    m: tuple[int | str, ...] | None = None
    estimators: tuple[tuple[str, dict], ...] = (("gw", {}),)
    replicates: int = 1
    base_seed: int = 0
    out: str | None = None
    gamma: float = 1.0
    normalize: str = "none"
    c1: float = 3.0
    c5: float = 0.5
    jobs: int = 1

    def validate(self) -> None:
        if not (self.kinds and self.d and self.n):
            raise InvalidInput("sweep grid must have kinds, d, and n entries")
        if self.m is not None and not self.m:
            raise InvalidInput("m list, when given, must be non-empty")
        if not self.estimators:
            raise InvalidInput("estimator list must be non-empty")
        for name, _ in self.estimators:
            if name not in ESTIMATORS:
                raise InvalidInput(f"unknown estimator {name!r}")
        if self.replicates < 1:
            raise InvalidInput("replicates must be >= 1")
        if self.jobs < 1:
            raise InvalidInput("jobs must be >= 1")


def _estimator_options(name: str, extra: dict):
    """Build the per-estimator options object from a config dict."""
    extra = dict(extra)
    if name == "gw":
        return GwOptions(**extra)
    if name in ("qmle-local", "qmle-exhaustive"):
        extra.pop("mode", None)  # the estimator name fixes the mode
        return SearchOptions(**extra)
    if name == "spectral":
        return extra or None
    if extra:
        raise InvalidInput(f"estimator {name!r} takes no options")
    return None


def sweep_config_from_json(doc: dict, out: str | None = None,
                           jobs: int = 1) -> SweepConfig:
    """Parse the sweep-config JSON schema (see the cli module docstring).

    Raises
    ------
    FileFormatError
        On unknown keys, malformed estimator entries, or a grid the
        validator rejects.
    """
    if not isinstance(doc, dict):
        raise FileFormatError("sweep config must be a JSON object")
    known = {
        "kinds", "d", "n", "m", "estimators", "replicates", "base_seed",
        "out", "gamma", "normalize", "c1", "c5",
    }
    unknown = set(doc) - known
    if unknown:
        raise FileFormatError(f"unknown sweep-config keys: {sorted(unknown)}")
    estimators = []
    for entry in doc.get("estimators", ["gw"]):
        if isinstance(entry, str):
            estimators.append((entry, {}))
        elif isinstance(entry, dict) and "name" in entry:
            opts = {k: v for k, v in entry.items() if k != "name"}
            estimators.append((entry["name"], opts))
        else:
            raise FileFormatError(
                f"estimator entries are names or {{'name': ..., options}}; got {entry!r}"
            )
    try:
        config = SweepConfig(
            kinds=tuple(doc["kinds"]),
            d=tuple(int(v) for v in doc["d"]),
            n=tuple(v if v == EXACT else int(v) for v in doc["n"]),
            m=(None if "m" not in doc
               else tuple(v if v == EXACT else int(v) for v in doc["m"])),
            estimators=tuple(estimators),
            replicates=int(doc.get("replicates", 1)),
            base_seed=int(doc.get("base_seed", 0)),
            out=out if out is not None else doc.get("out"),
            gamma=float(doc.get("gamma", 1.0)),
            normalize=str(doc.get("normalize", "none")),
            c1=float(doc.get("c1", 3.0)),
            c5=float(doc.get("c5", 0.5)),
            jobs=jobs,
        )
        config.validate()
        for name, extra in config.estimators:
            _estimator_options(name, extra)  # surface bad option keys now
    except (KeyError, TypeError, ValueError, InvalidInput) as exc:
        raise FileFormatError(f"bad sweep config: {exc}") from exc
    return config


def _cells(config: SweepConfig) -> list[tuple[int, str, int, int | str, int | str]]:
    out = []
    m_axis: tuple = config.m if config.m is not None else (None,)
    for gi, (kind, d, m, n) in enumerate(
        product(config.kinds, config.d, m_axis, config.n)
    ):
        out.append((gi, kind, d, n if m is None else m, n))
    return out


def _cell_spec(config: SweepConfig, kind: str, d: int, m, n, seed: int) -> InstanceSpec:
    return InstanceSpec(
        kind=kind, d=d, gamma=config.gamma, m=m, n=n,
        normalize=config.normalize, c1=config.c1, c5=config.c5, seed=seed,
    )


def _size_str(v: int | str) -> str:
    return v if isinstance(v, str) else str(v)


def _row_key(row: dict) -> tuple[str, str, str, str, str]:
    return (row["estimator"], row["d"], row["m"], row["n"], row["seed"])


def _record_key(rec: TrialRecord) -> tuple[str, str, str, str, str]:
    return (rec.estimator, str(rec.d), _size_str(rec.m), _size_str(rec.n), str(rec.seed))


def _record_to_row(rec: TrialRecord) -> list[str]:
    return [
        rec.estimator,
        str(rec.d),
        _size_str(rec.m),
        _size_str(rec.n),
        str(rec.seed),
        "" if rec.epsilon is None else format_float(rec.epsilon),
        format_float(rec.frob_loss_sq),
        format_float(rec.nf_loss_sq),
        format_float(rec.trace_loss),
        str(rec.hamming),
        format_float(rec.objective),
        str(rec.iterations),
        "true" if rec.converged else "false",
        format_float(rec.runtime_ms),
        rec.status,
    ]


def _size_from_str(v: str) -> int | str:
    return v if v == EXACT else int(v)


def _record_from_row(row: dict, thread_count: int) -> TrialRecord:
    # repr round-trips float64 exactly, so re-read records equal originals
    return TrialRecord(
        estimator=row["estimator"],
        d=int(row["d"]),
        m=_size_from_str(row["m"]),
        n=_size_from_str(row["n"]),
        seed=int(row["seed"]),
        epsilon=None if row["epsilon"] == "" else float(row["epsilon"]),
        frob_loss_sq=float(row["frob_loss_sq"]),
        nf_loss_sq=float(row["nf_loss_sq"]),
        trace_loss=float(row["trace_loss"]),
        hamming=int(row["hamming"]),
        objective=float(row["objective"]),
        iterations=int(row["iterations"]),
        converged=row["converged"] == "true",
        runtime_ms=float(row["runtime_ms"]),
        thread_count=thread_count,
        status=row["status"],
    )


def _trim_partial_line(path: str) -> None:
    # a crash can tear the final line; drop the fragment so appended rows
    # stay well-formed and the torn trial is simply re-run
    with open(path, "rb+") as fh:
        data = fh.read()
        if data and not data.endswith(b"\n"):
            fh.seek(0)
            fh.truncate(data.rfind(b"\n") + 1)


def _read_done(path: str, thread_count: int) -> dict[tuple, TrialRecord]:
    done: dict[tuple, TrialRecord] = {}
    with open(path, "r", encoding="ascii", newline="") as fh:
        for row in csv.DictReader(fh):
            if any(row.get(col) is None for col in TRIAL_COLUMNS):
                continue  # short row from a torn write; re-run it
            try:
                rec = _record_from_row(row, thread_count)
            except ValueError:
                continue
            done[_row_key(row)] = rec
    return done


def _sweep_task(args) -> TrialRecord:
    spec, name, extra, jobs = args
    instance = make_instance(spec)
    return run_trial(instance, name, _estimator_options(name, extra), thread_count=jobs)


def _aggregate(cell_rows: dict[tuple, list[TrialRecord]]) -> list[dict]:
    table = []
    for (kind, estimator, d, m, n), recs in sorted(
        cell_rows.items(), key=lambda kv: str(kv[0])
    ):
        losses = [r.frob_loss_sq for r in recs if r.status == "ok"]
        k = len(losses)
        mean = float(np.mean(losses)) if k else math.nan
        median = float(np.median(losses)) if k else math.nan
        stderr = float(np.std(losses, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
        table.append({
            "kind": kind,
            "estimator": estimator,
            "d": d,
            "m": m,
            "n": n,
            "count": len(recs),
            "failures": len(recs) - k,
            "mean_frob_loss_sq": mean,
            "median_frob_loss_sq": median,
            "stderr_frob_loss_sq": stderr,
        })
    return table


def run_sweep(config: SweepConfig,
              progress: Callable[[str], None] | None = None
              ) -> tuple[list[TrialRecord], list[dict]]:
    """Run the full grid, replicated and scored.

    When ``config.out`` is set, rows append to the CSV as they finish and
    any (estimator, d, m, n, seed) keys already present are skipped, so an
    interrupted sweep resumes where it stopped; skipped rows are read back
    and still count in the aggregate table.  Worker-pool execution
    (``jobs > 1``) changes completion order only: every trial derives its
    rng stream from its own coordinates.
    """
    config.validate()
    done: dict[tuple, TrialRecord] = {}
    writer = None
    out_fh = None
    if config.out:
        exists = os.path.exists(config.out) and os.path.getsize(config.out) > 0
        if exists:
            _trim_partial_line(config.out)
            done = _read_done(config.out, config.jobs)
        out_fh = open(config.out, "a", encoding="ascii", newline="")
        writer = csv.writer(out_fh, lineterminator="\n")
        if not exists:
            writer.writerow(TRIAL_COLUMNS)
            out_fh.flush()

    cells = _cells(config)
    total = len(cells)
    tasks: list[tuple] = []  # (order, cell meta, task args or finished record)
    for gi, kind, d, m, n in cells:
        for r in range(config.replicates):
            seed = mix64(config.base_seed, gi, r)
            spec = _cell_spec(config, kind, d, m, n, seed)
            if progress is not None:
                progress(f"cell {gi + 1}/{total} replicate {r + 1}/{config.replicates}")
            for name, extra in config.estimators:
                key = (name, str(d), _size_str(m), _size_str(n), str(seed))
                meta = (kind, name, d, m, n)
                if key in done:
                    tasks.append((len(tasks), meta, done[key], None))
                else:
                    tasks.append((len(tasks), meta, None, (spec, name, extra, config.jobs)))

    records: dict[int, TrialRecord] = {}
    pending = [(order, args) for order, _, rec, args in tasks if rec is None]
    for order, _, rec, _ in tasks:
        if rec is not None:
            records[order] = rec

    def finish(order: int, rec: TrialRecord) -> None:
        records[order] = rec
        if writer is not None:
            writer.writerow(_record_to_row(rec))
            out_fh.flush()

    try:
        if config.jobs > 1 and pending:
            with ProcessPoolExecutor(max_workers=config.jobs) as pool:
                for (order, _), rec in zip(
                    pending, pool.map(_sweep_task, [args for _, args in pending])
                ):
                    finish(order, rec)
        else:
            for order, args in pending:
                finish(order, _sweep_task(args))
    finally:
        if out_fh is not None:
            out_fh.close()

    ordered = [records[order] for order, *_ in tasks]
    cell_rows: dict[tuple, list[TrialRecord]] = {}
    for (order, meta, _, _), rec in zip(tasks, ordered):
        cell_rows.setdefault(meta, []).append(rec)
    return ordered, _aggregate(cell_rows)


@dataclass(frozen=True)
class ThresholdConfig:
    """Knobs for `threshold_search` that the criteria leave open."""

    kind: str = "wishart"
    gamma: float = 1.0
    normalize: str = "none"
    c1: float = 3.0
    c5: float = 0.5
    base_seed: int = 0
    n_start: int = 8
    n_cap: int = 10**6
    options: object = None


def threshold_search(d: int, estimator: str, tau: float, reps: int,
                     config: ThresholdConfig | None = None) -> int:
    """Smallest sample size n (with m = n) whose mean relative squared loss
    ``frob_loss_sq / ||Sigma||_F^2`` over ``reps`` replicates is <= tau.

    Doubles n from ``config.n_start`` until the threshold is met, then
    bisects the last doubling interval.  Replicate r keeps the stream
    ``mix64(base_seed, 0, r)`` at every probed n (common random numbers:
    each replicate's Sigma and pi_star are held fixed while n varies, which
    keeps the probed mean close to monotone in n).  A failed trial counts
    as relative loss infinity.

    Raises
    ------
    InvalidInput
        If tau is outside (0, 1] or reps < 1.
    BudgetExceeded
        If the doubling phase passes ``config.n_cap``.
    """
    if not 0.0 < tau <= 1.0:
        raise InvalidInput("tau must be in (0, 1]")
    if reps < 1:
        raise InvalidInput("reps must be >= 1")
    config = config or ThresholdConfig()
    seeds = [mix64(config.base_seed, 0, r) for r in range(reps)]
    cache: dict[int, float] = {}

    def probe(n: int) -> float:
        if n not in cache:
            rels = []
            for seed in seeds:
                spec = InstanceSpec(
                    kind=config.kind, d=d, gamma=config.gamma, m=n, n=n,
                    normalize=config.normalize, c1=config.c1, c5=config.c5,
                    seed=seed,
                )
                instance = make_instance(spec)
                rec = run_trial(instance, estimator, config.options)
                if rec.status != "ok":
                    rels.append(math.inf)
                else:
                    denom = linalg.frobenius_norm(instance.sigma) ** 2
                    rels.append(rec.frob_loss_sq / denom)
            cache[n] = float(np.mean(rels))
        return cache[n]

    n = config.n_start
    if probe(n) <= tau:
        return n
    while True:
        if 2 * n > config.n_cap:
            raise BudgetExceeded(
                f"threshold not reached by n = {n} (cap {config.n_cap})"
            )
        n *= 2
        if probe(n) <= tau:
            break
    lo, hi = n // 2, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid) <= tau:
            hi = mid
        else:
            lo = mid
    return hi
