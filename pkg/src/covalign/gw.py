"""Entropic Gromov-Wasserstein alignment over the Birkhoff polytope.

The relaxed criterion ``max_P <P Sigma_hat_X P^T, Sigma_hat_Y>`` is a convex
maximization, so its optimum sits at a vertex (a permutation matrix); the
solver chases it with the entropic fixed point

    P  <-  KL-project( exp(G / epsilon) )  onto  {P >= 0 : P 1 = P^T 1 = 1},

where ``G = 2 Sigma_hat_Y P Sigma_hat_X`` is the gradient, then rounds the
final coupling to the closest permutation by maximizing matched mass.
Marginals here sum to 1 per row/column (total mass d), which keeps relaxed
and rounded objectives on the same scale as `qap_objective`.

All Sinkhorn arithmetic is in the log domain: at the epsilons this problem
needs (1/d^2 and colder) the raw kernel entries overflow double precision
immediately.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .assignment import lap_max
from .errors import NonFiniteMatrix, SinkhornStall
from .linalg import Matrix, Perm
from .model import qap_objective
from .search import all_swap_deltas

__all__ = [
    "COUPLING_TOL",
    "GwOptions",
    "GwReport",
    "MarginalAudit",
    "audit_couplings",
    "coupling_marginal_error",
    "sinkhorn_project",
    "entropic_gw",
    "round_coupling",
    "gw_estimate",
]

#: marginal deviation above which a matrix does not count as a coupling.
COUPLING_TOL = 1e-8

# Cold kernels (entries spanning thousands of log-units) break the plain
# row/col rebalance: the marginal error can decay like 1/sweep, so no sweep
# budget reaches 1e-9, and the iterate can land in a metastable basin
# separated from the solution by coupling entries that have underflowed to
# exact zero, where no local step sees a way out.  The rescues, layered:
#
# - Newton steps on the row residual close the endgame at quadratic rate,
#   with a Levenberg-Marquardt damping ladder because the Jacobian turns
#   singular exactly in the near-vertex regimes that need rescuing.
# - The exponents f + K + g are accumulated with error-free two-term
#   splits: potentials reach 1e4 on cold kernels, where a plain sum carries
#   ULP noise near 2e-12 that corrupts both the Jacobian's small singular
#   values and the marginal measurement itself.
# - Cold starts are attempted in a fixed order until one converges.  At low
#   temperature the fixed point is a local perturbation of the
#   optimal-assignment vertex, so the assignment dual certificate (every
#   exponent at or below zero, equality on the matching) starts inside the
#   correct basin; but shortest-augmenting-path duals sit on the boundary
#   of the dual optimal set and often make spurious extra edges tight,
#   which turns the finish into a harmonic crawl toward potentials at
#   infinity.  Those kernels are instead served by a geometric temperature
#   ladder from zero potentials (each stage solves a hotter rescaling and
#   hands its potentials down), and as last insurance by the duals of a
#   deterministically tilted copy of the kernel, where the tilt breaks the
#   ties that made the untilted duals degenerate.
# - A nearly decoupled block converges at the rate of its weak cross mass:
#   sweeps contract by 1 - mu per move, and Newton cannot take the cure
#   because the block may sit tens of log-units from level, far outside any
#   trust region.  The residual component along the block direction is
#   close to monotone in the shift, so when the error stops halving every
#   few moves a bracketed secant jumps the longest-step singular direction
#   (or the worst row alone) to its root in one composite move, and a short
#   relax phase cleans up the transverse modes the jump excites before the
#   composite is measured for acceptance.
_NEWTON_START = 4
_NEWTON_DAMPING = (0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2)
_NEWTON_ALPHAS = (1.0, 0.5, 0.25)
_HOT_SPAN = 40.0
_LADDER_RATIO = 4.0
_LADDER_TOL = 1e-3
_LADDER_TIGHT = 1e-6
_ATTEMPT_CAP = 300
_LADDER_CAP = 800
_WARM_BUDGET = 80
_TILT = 1e-7
_STALL_WINDOW = 8
_STALL_FACTOR = 0.5
_RESCUE_EVALS = 14
_RESCUE_RELAX = 24


@dataclass(frozen=True)
class GwOptions:
    """Solver knobs.  ``epsilon=None`` means the scale-free default 1/d^2.

    ``anneal`` runs a geometric epsilon schedule (factor ``anneal_factor``
    from ``anneal_start`` down to ``epsilon``) before finishing at the target
    temperature; off by default so runs are comparable across settings.
    """

    epsilon: float | None = None
    max_outer: int = 1000
    tol_outer: float = 1e-7
    max_sinkhorn: int = 10000
    tol_marginal: float = 1e-9
    init: str = "uniform"  # "uniform" | "identity" | "given"
    init_coupling: np.ndarray | None = None
    anneal: bool = False
    anneal_start: float | None = None
    anneal_factor: float = 0.7

    def resolve_epsilon(self, d: int) -> float:
        eps = self.epsilon if self.epsilon is not None else 1.0 / d**2
        if eps <= 0:
            raise ValueError("epsilon must be positive")
        return eps


@dataclass(frozen=True)
class GwReport:
    coupling: Matrix
    permutation: Perm
    objective_relaxed: float
    objective_rounded: float
    outer_iterations: int
    converged: bool
    # relaxed objective after each outer step, for monotonicity diagnostics
    trajectory: np.ndarray = field(default_factory=lambda: np.zeros(0))


def coupling_marginal_error(p: np.ndarray) -> float:
    """Largest deviation of any row or column sum from 1."""
    return max(
        float(np.abs(p.sum(axis=1) - 1.0).max()),
        float(np.abs(p.sum(axis=0) - 1.0).max()),
    )


@dataclass
class MarginalAudit:
    """Running tally of marginal errors over every emitted coupling."""

    count: int = 0
    worst: float = 0.0

    def record(self, err: float) -> None:
        self.count += 1
        if err > self.worst:
            self.worst = err


_audit: MarginalAudit | None = None


@contextmanager
def audit_couplings():
    """Measure every coupling emitted inside the block.

    Covers both projection outputs and the outer loop's per-step iterates,
    so a suite can enforce the coupling contract (marginal deviation at most
    `COUPLING_TOL`) over a whole batch of runs without re-deriving anything.
    """
    global _audit
    prev = _audit
    _audit = audit = MarginalAudit()
    try:
        yield audit
    finally:
        _audit = prev


def _two_sum(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Error-free split: returns (s, e) with s = fl(a + b) and s + e = a + b
    exactly.  Needs round-to-nearest, which numpy guarantees."""
    s = a + b
    bp = s - a
    return s, (a - (s - bp)) + (b - bp)


def _stats(log_kernel: np.ndarray, f: np.ndarray
           ) -> tuple[float, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Marginal state of the coupling induced by f.

    g is chosen so column sums are exact by construction; the returned resid
    is the log row-sum vector, so gap = max |row sum - 1|.  The exponents
    s2 + lo = f + K + g are kept as value/correction pairs: with potentials
    near 1e4 a plain triple sum is only good to ~2e-12 absolute, which is
    above the 1e-9 regime this solver has to certify."""
    s1, e1 = _two_sum(f[:, None], log_kernel)
    m0 = s1.max(axis=0)
    with np.errstate(over="ignore", invalid="ignore"):
        z0 = np.exp(s1 - m0) * (1.0 + e1)
        g = -(m0 + np.log(z0.sum(axis=0)))
        s2, e2 = _two_sum(s1, g[None, :])
        lo = e1 + e2
        m1 = s2.max(axis=1)
        z1 = np.exp(s2 - m1[:, None]) * (1.0 + lo)
        resid = m1 + np.log(z1.sum(axis=1))
        gap = float(np.abs(np.expm1(resid)).max())
    if not np.isfinite(gap):
        gap = np.inf
    return gap, resid, s2, lo, g


def _coupling_from(log_kernel: np.ndarray, f: np.ndarray, g: np.ndarray
                   ) -> Matrix:
    """exp(f + K + g) with the same compensated exponents the solver
    measured, so the emitted matrix is the one whose marginals passed."""
    s1, e1 = _two_sum(f[:, None], log_kernel)
    s2, e2 = _two_sum(s1, g[None, :])
    p = np.exp(s2) * (1.0 + (e1 + e2))
    if _audit is not None:
        _audit.record(coupling_marginal_error(p))
    return p


def _jacobian_svd(resid: np.ndarray, s2: np.ndarray, lo: np.ndarray):
    """SVD of the reduced Jacobian dR/df = I - S D^T, or None.

    With g eliminated, S is the row-softmax and D the column-softmax of the
    current exponents.  A uniform shift of f is absorbed by g, so the
    all-ones direction is an exact null vector; its numerical singular
    value can drift above genuine slow modes and contaminate their singular
    vectors, so the gauge is deflated to 1 with a rank-one update before
    factoring.  Singular values at or below the noise floor are zeroed."""
    d = resid.shape[0]
    with np.errstate(over="ignore"):
        col_soft = np.exp(s2) * (1.0 + lo)
        row_soft = np.exp(s2 - resid[:, None]) * (1.0 + lo)
    jac = np.eye(d) - row_soft @ col_soft.T + 1.0 / d
    if not np.all(np.isfinite(jac)):
        return None
    try:
        u, s, vt = np.linalg.svd(jac)
    except np.linalg.LinAlgError:
        return None
    s = np.where(s > 16.0 * d * np.finfo(np.float64).eps, s, 0.0)
    if s[0] == 0.0:
        return None
    return u, s, vt


def _newton_steps(resid: np.ndarray, s2: np.ndarray, lo: np.ndarray
                  ) -> list[np.ndarray]:
    """Candidate Newton steps for the reduced residual R(f) = log row sums.

    Near a degenerate fixed point (coupling on or close to a permutation
    face) the reduced Jacobian is singular to working precision, so raw
    solves explode along noise directions; a Levenberg-Marquardt damping
    ladder keeps the informative directions and suppresses the rest.  The
    caller keeps whichever candidate measures best and may reject them
    all."""
    svd = _jacobian_svd(resid, s2, lo)
    if svd is None:
        return []
    u, s, vt = svd
    coef = u.T @ -resid
    steps = []
    for damp in _NEWTON_DAMPING:
        lam = damp * s[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(s > 0.0, s / (s * s + lam * lam), 0.0)
        steps.append(vt.T @ (coef * w))
    return steps


def _line_root(
    log_kernel: np.ndarray, f: np.ndarray, gap: float, resid: np.ndarray,
    direction: np.ndarray, t_first: float,
) -> tuple[np.ndarray | None, tuple[float, tuple, np.ndarray] | None, int]:
    """1D root-find on the residual component along a potential direction.

    Brackets by doubling from the linear prediction t_first and polishes
    with the Illinois rule.  Returns (root point or None, best measured
    point that beats the incoming gap or None, evaluations spent)."""
    h0 = float(direction @ resid)
    if not np.isfinite(h0) or h0 == 0.0 or t_first == 0.0:
        return None, None, 0
    best: tuple[float, tuple, np.ndarray] | None = None
    evals = 0

    def probe(t: float) -> float:
        nonlocal best, evals
        trial = f + t * direction
        st = _stats(log_kernel, trial)
        evals += 1
        if st[0] < gap and (best is None or st[0] < best[0]):
            best = (st[0], st, trial)
        with np.errstate(invalid="ignore"):
            h = float(direction @ st[1])
        return h if np.isfinite(h) else np.nan

    ta, ha = 0.0, h0
    tb = t_first
    hb = probe(tb)
    while evals < _RESCUE_EVALS and np.isfinite(hb) and hb * h0 > 0.0:
        ta, ha = tb, hb
        tb *= 2.0
        hb = probe(tb)
    if not np.isfinite(hb) or hb * h0 > 0.0:
        return None, best, evals
    while evals < _RESCUE_EVALS and hb != ha:
        tc = tb - hb * (tb - ta) / (hb - ha)
        hc = probe(tc)
        if not np.isfinite(hc):
            break
        if hc == 0.0:
            tb = tc
            break
        if hc * hb < 0.0:
            ta, ha = tb, hb
        else:
            ha *= 0.5
        tb, hb = tc, hc
    return f + tb * direction, best, evals


def _stall_rescue(
    log_kernel: np.ndarray, f: np.ndarray, gap: float, resid: np.ndarray,
    s2: np.ndarray, lo: np.ndarray, tol: float,
) -> tuple[tuple, np.ndarray, int] | None:
    """Jump-and-relax move for a stalled solve.

    The stall signature is a nearly decoupled block whose potential offset
    converges at the rate of its weak cross mass; the linearized solve wants
    a step of many log-units along one singular direction, which no damped
    Newton step can take (the quadratic model is invalid at that length) and
    which plain sweeps shrink by parts in a million per move.  The residual
    component along the line is close to monotone in the shift, so a
    bracketed secant finds its root directly.  The jump excites the fast
    transverse modes, which a short relax phase removes; the composite is
    accepted only if the relaxed, freshly measured error strictly beats the
    incoming one.  Falls back from the singular direction to the worst row's
    own coordinate.  Returns (stats, f, moves spent) or None."""
    candidates: list[tuple[np.ndarray, float]] = []
    svd = _jacobian_svd(resid, s2, lo)
    if svd is not None:
        u, s, vt = svd
        with np.errstate(divide="ignore", invalid="ignore"):
            lengths = np.where(s > 0.0, np.abs(u.T @ resid) / s, 0.0)
        k = int(np.argmax(lengths))
        if lengths[k] > 0.5:
            candidates.append((vt[k], float(-(u[:, k] @ resid) / s[k])))
    i = int(np.argmax(np.abs(np.expm1(resid))))
    e = np.zeros(f.shape[0])
    e[i] = 1.0
    candidates.append((e, float(-np.sign(resid[i]) * max(abs(resid[i]),
                                                         1.0))))
    spent = 0
    for direction, t_first in candidates:
        root, best, evals = _line_root(log_kernel, f, gap, resid, direction,
                                       t_first)
        spent += evals
        if root is not None:
            root_gap = _stats(log_kernel, root)[0]
            spent += 1
            if np.isfinite(root_gap) and root_gap <= max(1.0, 1e4 * gap):
                f2, _, used, _ = _solve_stage(log_kernel, root, tol,
                                              _RESCUE_RELAX, rescue=False)
                spent += used
                st = _stats(log_kernel, f2)
                spent += 1
                if st[0] < gap:
                    return st, f2, spent
        if best is not None and best[0] < gap:
            return best[1], best[2], spent
    return None


def _solve_stage(log_kernel: np.ndarray, f: np.ndarray, tol: float,
                 budget: int, rescue: bool = True
                 ) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """Drive the row error below tol at one fixed temperature.

    Each budget unit is one move: a Newton candidate when one strictly
    reduces the measured error, a jump-and-relax rescue when the error has
    stopped halving over the stall window, otherwise a plain rebalance
    sweep.  Adoption always rests on a fresh measurement, never on
    extrapolated state.  The rescue flag exists because the rescue's relax
    phase runs this same loop and must not recurse."""
    d = f.shape[0]
    gap, resid, s2, lo, g = _stats(log_kernel, f)
    used = 0
    hist: list[float] = []
    cooldown = 0
    while True:
        if gap <= tol:
            return f, g, used, True
        if used >= budget:
            return f, g, used, False
        used += 1
        hist.append(gap)
        if (rescue and d >= 2 and cooldown == 0
                and len(hist) > _STALL_WINDOW
                and gap > _STALL_FACTOR * hist[-1 - _STALL_WINDOW]):
            out = _stall_rescue(log_kernel, f, gap, resid, s2, lo, tol)
            if out is not None:
                f = out[1]
                gap, resid, s2, lo, g = out[0]
                used += out[2]
                hist.clear()
                continue
            cooldown = _STALL_WINDOW
        elif cooldown:
            cooldown -= 1
        best: tuple[float, tuple, np.ndarray] | None = None
        if d >= 2 and used >= _NEWTON_START:
            for step in _newton_steps(resid, s2, lo):
                for alpha in _NEWTON_ALPHAS:
                    trial = f + alpha * step
                    st = _stats(log_kernel, trial)
                    if st[0] < gap and (best is None or st[0] < best[0]):
                        best = (st[0], st, trial)
                    if best is not None and best[0] < 0.1 * gap:
                        break
                if best is not None and best[0] < 0.1 * gap:
                    break
        if best is not None:
            f = best[2]
            gap, resid, s2, lo, g = best[1]
        else:
            f = f - resid
            gap, resid, s2, lo, g = _stats(log_kernel, f)


def _sinkhorn_potentials(
    log_kernel: np.ndarray,
    tol_marginal: float,
    max_sinkhorn: int,
    f0: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Potentials (f, g) with both marginals of exp(f + K + g) within
    tol_marginal of the all-ones vector.

    Warm starts first get a direct attempt at a small budget.  Cold solves
    (and failed warm starts, whose potentials carry the structure of the old
    kernel) run the cold-start attempts in order: hot kernels solve directly
    from zeros; cold kernels try the assignment dual certificate, then the
    temperature ladder, then the tilted dual certificate, each capped so a
    failed attempt cannot starve the next.  ``max_sinkhorn`` caps the total
    number of moves across all attempts."""
    d = log_kernel.shape[0]
    total = 0
    if f0 is not None:
        f, g, used, done = _solve_stage(
            log_kernel, f0.astype(np.float64).copy(), tol_marginal,
            min(max_sinkhorn, _WARM_BUDGET),
        )
        total += used
        if done:
            return f, g, total
    span = float(log_kernel.max() - log_kernel.min()) if d > 0 else 0.0
    if span <= _HOT_SPAN:
        attempts = ("zeros", "duals")
    else:
        attempts = ("duals", "ladder", "tilted-duals")
    for idx, kind in enumerate(attempts):
        remaining = max_sinkhorn - total
        if remaining <= 0:
            break
        last = idx == len(attempts) - 1
        # a single-basin start that succeeds at all does so within a few
        # hundred moves, and a failed one never recovers, so cap it and
        # move on; the ladder spreads its budget over several stages and
        # gets more room
        cap = _LADDER_CAP if kind == "ladder" else _ATTEMPT_CAP
        budget = remaining if last else min(remaining, cap)
        if kind == "ladder":
            f, g, used, done = _ladder(log_kernel, span, tol_marginal, budget)
        else:
            if kind == "zeros":
                f = np.zeros(d)
            elif kind == "duals":
                f = -lap_max(log_kernel).row_dual
            else:
                tilt = np.sin(
                    3.0 * np.pi * np.arange(d * d, dtype=np.float64)
                    / (d * d + 1.0)
                ).reshape(d, d)
                f = -lap_max(log_kernel + _TILT * span * tilt).row_dual
            f, g, used, done = _solve_stage(log_kernel, f, tol_marginal,
                                            budget)
        total += used
        if done:
            return f, g, total
    raise SinkhornStall(
        f"marginal error above {tol_marginal:.1e} after {max_sinkhorn} "
        "rebalance updates; epsilon is likely too small for double precision"
    )


def _ladder(log_kernel: np.ndarray, span: float, tol_marginal: float,
            budget: int) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """Temperature-ladder attempt from zero potentials: solve geometrically
    colder rescalings of the kernel, each stage warm-starting the next with
    its potentials scaled by the temperature ratio, finishing at the true
    temperature and tolerance."""
    d = log_kernel.shape[0]
    scale = max(1.0, span / _HOT_SPAN)
    ladder = []
    while scale > 1.0:
        ladder.append(scale)
        scale /= _LADDER_RATIO
    ladder.append(1.0)
    f = np.zeros(d)
    g = np.zeros(d)
    prev = ladder[0]
    total = 0
    for si, stage_scale in enumerate(ladder):
        f = f * (prev / stage_scale)
        prev = stage_scale
        last = stage_scale == 1.0
        # The final stage inherits its start from the hand-down, and any
        # error in it lands on the near-singular modes of the cold kernel,
        # where convergence is glacial.  Solving the last hot stage tightly
        # is cheap there and keeps the cold start inside Newton range.
        if last:
            tol = tol_marginal
        elif si == len(ladder) - 2:
            tol = _LADDER_TIGHT
        else:
            tol = _LADDER_TOL
        f, g, used, done = _solve_stage(
            log_kernel / stage_scale,
            f,
            tol,
            budget - total,
        )
        total += used
        if not done:
            return f, g, total, False
    return f, g, total, True


def sinkhorn_project(
    log_kernel: np.ndarray,
    tol_marginal: float = 1e-9,
    max_sinkhorn: int = 10000,
) -> Matrix:
    """KL-project ``exp(log_kernel)`` onto couplings with unit marginals.

    Runs entirely in the log domain, so arbitrarily scaled kernels are fine.

    Raises
    ------
    SinkhornStall
        If the marginal error is still above tolerance after
        ``max_sinkhorn`` sweeps.
    """
    log_kernel = np.asarray(log_kernel, dtype=np.float64)
    if not np.all(np.isfinite(log_kernel)):
        raise NonFiniteMatrix("log-kernel must be finite")
    f, g, _ = _sinkhorn_potentials(log_kernel, tol_marginal, max_sinkhorn)
    return _coupling_from(log_kernel, f, g)


def _init_coupling(d: int, opts: GwOptions) -> Matrix:
    if opts.init == "uniform":
        return np.full((d, d), 1.0 / d)
    if opts.init == "identity":
        return np.eye(d)
    if opts.init == "given":
        if opts.init_coupling is None:
            raise ValueError("init='given' requires init_coupling")
        p = np.asarray(opts.init_coupling, dtype=np.float64)
        if p.shape != (d, d):
            raise ValueError("init_coupling has wrong shape")
        return p.copy()
    raise ValueError(f"unknown init {opts.init!r}")


def _epsilon_schedule(target: float, opts: GwOptions) -> list[float]:
    if not opts.anneal:
        return [target]
    start = opts.anneal_start if opts.anneal_start is not None else 100.0 * target
    out = []
    eps = start
    while eps > target:
        out.append(eps)
        eps *= opts.anneal_factor
    out.append(target)
    return out


def entropic_gw(sigma_x: Matrix, sigma_y: Matrix,
                opts: GwOptions | None = None) -> GwReport:
    """Run the entropic fixed point to a coupling and round it.

    Stops when the coupling moves less than ``tol_outer`` in Frobenius norm
    or after ``max_outer`` gradient steps (then ``converged=False``).
    Sinkhorn potentials are warm-started between outer steps; the projection
    contract is per-step unchanged.

    Raises
    ------
    SinkhornStall
        Propagated from the projection.
    NonFiniteMatrix
        If the relaxed objective stops being finite.
    """
    if sigma_x.shape != sigma_y.shape:
        raise ValueError("dimension mismatch")
    opts = opts or GwOptions()
    d = sigma_x.shape[0]
    target_eps = opts.resolve_epsilon(d)
    p = _init_coupling(d, opts)
    f = g = None
    trajectory: list[float] = []
    iterations = 0
    converged = False
    for eps in _epsilon_schedule(target_eps, opts):
        converged = False
        while iterations < opts.max_outer:
            grad = 2.0 * sigma_y @ p @ sigma_x
            f, g, _ = _sinkhorn_potentials(
                grad / eps, opts.tol_marginal, opts.max_sinkhorn, f0=f
            )
            p_new = _coupling_from(grad / eps, f, g)
            iterations += 1
            obj = linalg.inner(p_new @ sigma_x @ p_new.T, sigma_y)
            if not np.isfinite(obj):
                raise NonFiniteMatrix("relaxed objective diverged")
            trajectory.append(obj)
            step = float(np.linalg.norm(p_new - p))
            p = p_new
            if step < opts.tol_outer:
                converged = True
                break
    perm = round_coupling(p)
    return GwReport(
        coupling=p,
        permutation=perm,
        objective_relaxed=trajectory[-1] if trajectory else 0.0,
        objective_rounded=qap_objective(sigma_x, sigma_y, perm),
        outer_iterations=iterations,
        converged=converged,
        trajectory=np.asarray(trajectory),
    )


def round_coupling(p: Matrix) -> Perm:
    """Closest permutation to a coupling in matched mass: solve
    ``max_pi sum_i P[i, pi(i)]`` exactly; ties go to the lexicographically
    smallest map."""
    return lap_max(p).permutation


def gw_estimate(sigma_x: Matrix, sigma_y: Matrix,
                opts: GwOptions | None = None) -> GwReport:
    """Full estimator: entropic solve, round, then one best-improvement
    2-swap sweep on the rounded permutation; the better of the two
    permutations under the discrete objective is reported."""
    rep = entropic_gw(sigma_x, sigma_y, opts)
    perm = rep.permutation.copy()
    n_mat = linalg.perm_apply(sigma_x, perm)
    deltas = all_swap_deltas(n_mat, sigma_y)
    upper = np.triu_indices(perm.size, k=1)
    k = int(np.argmax(deltas[upper]))
    if deltas[upper][k] > 0.0:
        i, j = int(upper[0][k]), int(upper[1][k])
        perm[i], perm[j] = perm[j], perm[i]
        refined_obj = qap_objective(sigma_x, sigma_y, perm)
        if refined_obj > rep.objective_rounded:
            return GwReport(
                coupling=rep.coupling,
                permutation=perm,
                objective_relaxed=rep.objective_relaxed,
                objective_rounded=refined_obj,
                outer_iterations=rep.outer_iterations,
                converged=rep.converged,
                trajectory=rep.trajectory,
            )
    return rep
