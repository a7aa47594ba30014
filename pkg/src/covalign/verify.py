"""Empirical verification of the analytical facts the estimators lean on.

Each suite hammers one inequality or identity with seeded Monte Carlo draws
and reports the worst margin it saw; a failure carries the concrete
counterexample so it can be replayed.  The checkers guard their premises
and raise InvalidInput on inputs outside the hypothesis, so a bad draw is
reported as a bug in the suite, never as a disproof.

The inequalities themselves are deterministic facts; the draw distributions
here are merely dense probes of the hypothesis region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import InvalidInput
from .instances import hard_instance, sign_matrix
from .model import trace_loss
from .search import SearchOptions, qmle_estimate

__all__ = [
    "DEFAULT_COUNTS",
    "SuiteResult",
    "VerificationReport",
    "check_trace_frobenius",
    "check_quadratic_bound",
    "check_sandwich",
    "verify_lemmas",
    "format_report",
]

#: default draw counts per suite; keys are the suite names.
DEFAULT_COUNTS = {
    "trace-frobenius": 100_000,
    "sandwich": 10_000,
    "quadratic": 10_000,
    "interior": 1,
    "hard-prior": 200,
    "perm-algebra": 1_000,
}

# scalar inequalities are exact math: only accumulated roundoff is excused
_SCALAR_TOL = 1e-12
# matrix forms route through eigendecompositions; give them 1e-9
_MATRIX_TOL = 1e-9


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    checks: int
    worst_margin: float
    detail: str = ""
    counterexample: dict | None = None


@dataclass(frozen=True)
class VerificationReport:
    suites: tuple[SuiteResult, ...]

    @property
    def ok(self) -> bool:
        return all(s.passed for s in self.suites)


def check_trace_frobenius(x: np.ndarray) -> float:
    """Margin of ``sum (x_i - 1)^2 <= 4 (S + S^2)`` with S = sum (x_i - 1).

    Hypothesis: all x_i > 0 with product 1.  Returns lhs - rhs, which is
    <= 0 when the inequality holds.

    Raises
    ------
    InvalidInput
        If any x_i <= 0 or the product is not 1 (within 1e-8 in log).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise InvalidInput("x must be a non-empty vector")
    if not np.all(x > 0.0):
        raise InvalidInput("hypothesis needs x_i > 0")
    if abs(float(np.log(x).sum())) > 1e-8:
        raise InvalidInput("hypothesis needs prod(x_i) = 1")
    s = float((x - 1.0).sum())
    lhs = float(((x - 1.0) ** 2).sum())
    return lhs - 4.0 * (s + s * s)


def check_quadratic_bound(a: float, b: float, c: float, x: float) -> float:
    """Margin of ``x <= b/a + sqrt(c/a)`` given ``a x^2 <= b x + c``.

    Hypothesis: a > 0, b >= 0, c >= 0, x >= 0 and the premise inequality.
    Returns x - bound, <= 0 when the conclusion holds.

    Raises
    ------
    InvalidInput
        Outside the hypothesis.
    """
    if not (a > 0.0 and b >= 0.0 and c >= 0.0 and x >= 0.0):
        raise InvalidInput("hypothesis needs a > 0 and b, c, x >= 0")
    rhs = b * x + c
    if a * x * x > rhs + _SCALAR_TOL * (1.0 + abs(rhs)):
        raise InvalidInput("premise a x^2 <= b x + c does not hold")
    return x - (b / a + math.sqrt(c / a))


def check_sandwich(sigma: np.ndarray) -> float:
    """Margin of ``min(1, ||inv(S) - I||_F) / min(1, ||S - I||_F)`` staying
    inside [1/2, 2] for positive definite S.

    Returns how far the ratio sits outside the interval (<= 0 inside).
    The ratio degenerates to 1 at S = I (both norms vanish together).

    Raises
    ------
    InvalidInput
        If sigma is not symmetric positive definite.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InvalidInput("sigma must be square")
    if not np.allclose(sigma, sigma.T, rtol=0.0, atol=1e-12):
        raise InvalidInput("sigma must be symmetric")
    w, v = np.linalg.eigh(sigma)
    if w[0] <= 0.0:
        raise InvalidInput("sigma must be positive definite")
    d = sigma.shape[0]
    eye = np.eye(d)
    inv = (v / w) @ v.T
    num = min(1.0, float(np.linalg.norm(inv - eye)))
    den = min(1.0, float(np.linalg.norm(sigma - eye)))
    if den == 0.0:
        ratio = 1.0 if num == 0.0 else math.inf
    else:
        ratio = num / den
    return max(0.5 - ratio, ratio - 2.0)


def _fail(name: str, checks: int, margin: float, detail: str,
          counterexample: dict) -> SuiteResult:
    return SuiteResult(name, False, checks, margin, detail, counterexample)


def _suite_trace_frobenius(rng: np.random.Generator, count: int) -> SuiteResult:
    worst = -math.inf
    done = 0
    for d in range(2, 9):
        block = count // 7 + (1 if d - 2 < count % 7 else 0)
        if block == 0:
            continue
        x = rng.lognormal(mean=0.0, sigma=1.0, size=(block, d))
        x /= np.exp(np.log(x).mean(axis=1))[:, None]  # geometric mean 1
        s = (x - 1.0).sum(axis=1)
        lhs = ((x - 1.0) ** 2).sum(axis=1)
        rhs = 4.0 * (s + s * s)
        margin = lhs - rhs
        k = int(np.argmax(margin))
        tol = _SCALAR_TOL * (1.0 + np.abs(rhs))
        done += block
        worst = max(worst, float(margin[k]))
        if np.any(margin > tol):
            k = int(np.argmax(margin - tol))
            return _fail(
                "trace-frobenius", done, float(margin[k]),
                "sum (x-1)^2 exceeded 4(S + S^2)",
                {"x": x[k].tolist(), "lhs": float(lhs[k]), "rhs": float(rhs[k])},
            )
    # applied form: the same bound on the whitened relabeled covariance,
    # driven through the package's own trace_loss
    applied = max(1, count // 100)
    for _ in range(applied):
        d = int(rng.integers(2, 9))
        b = rng.standard_normal((d, d))
        sigma = b @ b.T / d + 0.5 * np.eye(d)
        pi = rng.permutation(d).astype(np.int64)
        root = linalg.sym_inv_sqrt(sigma)
        a = root @ linalg.perm_apply(sigma, linalg.perm_invert(pi)) @ root
        lhs = float(np.linalg.norm(a - np.eye(d)) ** 2)
        t = trace_loss(sigma, pi)
        rhs = 4.0 * (t + t * t)
        margin = lhs - rhs
        done += 1
        worst = max(worst, margin)
        if margin > _MATRIX_TOL * (1.0 + abs(rhs)):
            return _fail(
                "trace-frobenius", done, margin,
                "whitened-relabeling norm exceeded 4(t + t^2)",
                {"sigma": sigma.tolist(), "pi": pi.tolist(),
                 "lhs": lhs, "rhs": rhs},
            )
    return SuiteResult("trace-frobenius", True, done, worst)


def _suite_sandwich(rng: np.random.Generator, count: int) -> SuiteResult:
    worst = -math.inf
    for i in range(count):
        d = 2 + i % 7
        b = rng.standard_normal((d, d))
        sigma = b @ b.T / d + 0.05 * np.eye(d)
        margin = check_sandwich(sigma)
        worst = max(worst, margin)
        if margin > _MATRIX_TOL:
            return _fail(
                "sandwich", i + 1, margin,
                "inverse/direct distance ratio left [1/2, 2]",
                {"sigma": sigma.tolist()},
            )
    return SuiteResult("sandwich", True, count, worst)


def _suite_quadratic(rng: np.random.Generator, count: int) -> SuiteResult:
    a = rng.lognormal(size=count)
    b = rng.lognormal(size=count)
    c = rng.lognormal(size=count)
    # largest x satisfying the premise, then a uniform point below it
    x_max = (b + np.sqrt(b * b + 4.0 * a * c)) / (2.0 * a)
    x = rng.random(count) * x_max
    margin = x - (b / a + np.sqrt(c / a))
    k = int(np.argmax(margin))
    if margin[k] > _SCALAR_TOL * (1.0 + float(b[k] / a[k])):
        return _fail(
            "quadratic", count, float(margin[k]),
            "x exceeded b/a + sqrt(c/a) under the premise",
            {"a": float(a[k]), "b": float(b[k]), "c": float(c[k]),
             "x": float(x[k])},
        )
    return SuiteResult("quadratic", True, count, float(margin[k]))


def _suite_interior(_rng: np.random.Generator, _count: int) -> SuiteResult:
    # the relaxed likelihood criterion at the uniform coupling undercuts
    # every vertex on this covariance, so that criterion must be searched
    # over permutations, not over the polytope
    sigma = np.diag([1.0, 0.5, 0.5])
    inv = np.diag([1.0, 2.0, 2.0])
    p = np.full((3, 3), 1.0 / 3.0)
    interior = linalg.inner(p @ inv @ p.T, sigma)
    vertex_min = qmle_estimate(sigma, sigma, SearchOptions(mode="exhaustive")).objective
    checks = {
        "interior value is 10/9": abs(interior - 10.0 / 9.0) <= 1e-12,
        "vertex minimum is d = 3": abs(vertex_min - 3.0) <= 1e-12,
        "interior beats every vertex": interior < vertex_min,
    }
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        return _fail(
            "interior", len(checks), abs(interior - 10.0 / 9.0),
            "; ".join(failed),
            {"interior": float(interior), "vertex_min": float(vertex_min)},
        )
    return SuiteResult("interior", True, len(checks), abs(interior - 10.0 / 9.0))


def _suite_hard_prior(rng: np.random.Generator, draws: int) -> SuiteResult:
    c1 = 3.0
    done = 0
    for d in (16, 32, 64):
        bound = c1 * math.sqrt(d)
        accepted = 0
        keep = None
        for _ in range(draws):
            s = sign_matrix(d, rng)
            if not np.array_equal(s, s.T):
                return _fail("hard-prior", done, 1.0, "draw not symmetric",
                             {"d": d})
            if not np.all(np.abs(s) == 1.0):
                return _fail("hard-prior", done, 1.0, "draw has entries != +-1",
                             {"d": d})
            if float(np.linalg.norm(s) ** 2) != float(d * d):
                return _fail("hard-prior", done, 1.0,
                             "squared Frobenius norm of a sign matrix != d^2",
                             {"d": d})
            if float(np.abs(np.linalg.eigvalsh(s)).max()) <= bound:
                accepted += 1
                keep = s
            done += 1
        if accepted < draws / 2:
            return _fail(
                "hard-prior", done, (draws / 2 - accepted) / draws,
                f"acceptance rate below 1/2 at d={d} with c1={c1}",
                {"d": d, "accepted": accepted, "draws": draws},
            )
        sigma = hard_instance(d, 1000, 1000, c1=c1, rng=rng)
        op = float(np.abs(np.linalg.eigvalsh(sigma)).max())
        done += 1
        if op > 1.0 + 1e-10:
            return _fail("hard-prior", done, op - 1.0,
                         f"||Sigma||_op > 1 at d={d}", {"d": d, "opnorm": op})
        if d >= 32 and keep is not None:
            # separation under relabeling: far-apart permutations move the
            # sign matrix by a constant fraction of its norm
            for _ in range(100):
                while True:
                    p1 = rng.permutation(d).astype(np.int64)
                    p2 = rng.permutation(d).astype(np.int64)
                    if int((p1 != p2).sum()) >= d / 10:
                        break
                sep = float(
                    np.linalg.norm(
                        linalg.perm_apply(keep, p1) - linalg.perm_apply(keep, p2)
                    ) ** 2
                )
                done += 1
                if sep < 0.05 * d * d:
                    return _fail(
                        "hard-prior", done, 0.05 * d * d - sep,
                        f"relabeled sign matrices too close at d={d}",
                        {"d": d, "pi1": p1.tolist(), "pi2": p2.tolist(),
                         "separation": sep},
                    )
    return SuiteResult("hard-prior", True, done, 0.0)


def _suite_perm_algebra(rng: np.random.Generator, count: int) -> SuiteResult:
    for i in range(count):
        d = int(rng.integers(2, 9))
        a = rng.standard_normal((d, d))
        p1 = rng.permutation(d).astype(np.int64)
        p2 = rng.permutation(d).astype(np.int64)
        ident = linalg.perm_identity(d)
        m1, m2 = linalg.perm_matrix(p1), linalg.perm_matrix(p2)
        checks = {
            "relabel equals P A P^T":
                np.array_equal(linalg.perm_apply(a, p1), m1 @ a @ m1.T),
            "P_1 P_2 equals P of the composite":
                np.array_equal(m1 @ m2, linalg.perm_matrix(linalg.perm_compose(p2, p1))),
            "compose with inverse is identity":
                np.array_equal(linalg.perm_compose(p1, linalg.perm_invert(p1)), ident),
            "inverse of inverse restores":
                np.array_equal(linalg.perm_invert(linalg.perm_invert(p1)), p1),
            "identity relabel is a no-op":
                np.array_equal(linalg.perm_apply(a, ident), a),
            "relabel composes contravariantly":
                np.array_equal(
                    linalg.perm_apply(linalg.perm_apply(a, p1), p2),
                    linalg.perm_apply(a, linalg.perm_compose(p1, p2)),
                ),
        }
        failed = [name for name, ok in checks.items() if not ok]
        if failed:
            return _fail(
                "perm-algebra", i + 1, 1.0, "; ".join(failed),
                {"d": d, "pi1": p1.tolist(), "pi2": p2.tolist()},
            )
    return SuiteResult("perm-algebra", True, count, 0.0)


_SUITES = {
    "trace-frobenius": _suite_trace_frobenius,
    "sandwich": _suite_sandwich,
    "quadratic": _suite_quadratic,
    "interior": _suite_interior,
    "hard-prior": _suite_hard_prior,
    "perm-algebra": _suite_perm_algebra,
}


def verify_lemmas(rng: int | np.random.Generator = 0,
                  counts: dict | None = None) -> VerificationReport:
    """Run every suite and collect the results; failures are data, not
    exceptions.

    ``counts`` overrides draw counts per suite name (each must be >= 1);
    ``rng`` is a seed or a generator consumed sequentially in fixed suite
    order, so a report is reproducible from (rng, counts).
    """
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    table = dict(DEFAULT_COUNTS)
    if counts:
        unknown = set(counts) - set(table)
        if unknown:
            raise InvalidInput(f"unknown suite names: {sorted(unknown)}")
        for name, value in counts.items():
            if int(value) < 1:
                raise InvalidInput("counts must be >= 1 per suite")
            table[name] = int(value)
    results = tuple(
        _SUITES[name](gen, table[name]) for name in DEFAULT_COUNTS
    )
    return VerificationReport(suites=results)


def format_report(report: VerificationReport) -> str:
    """Fixed-width PASS/FAIL table with counterexamples inlined on failure."""
    width = max(len(s.name) for s in report.suites)
    lines = []
    for s in report.suites:
        mark = "PASS" if s.passed else "FAIL"
        line = f"{s.name:<{width}}  {mark}  checks={s.checks}  worst_margin={s.worst_margin:.3e}"
        if not s.passed:
            line += f"\n  {s.detail}\n  counterexample: {s.counterexample}"
        lines.append(line)
    return "\n".join(lines)
