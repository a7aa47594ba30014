"""covalign: align the feature orderings of two Gaussian datasets by
matching their covariance structure.

Two datasets share a covariance up to an unknown relabeling pi of the d
features; the estimators here recover it from the two sample covariances.
`gw_estimate` relaxes the matching problem over doubly stochastic couplings
and solves it with an entropic fixed point; `qmle_estimate` searches
permutations against the Gaussian quasi-likelihood; `spectral_estimate` is
the seriation baseline.  `instances`, `harness`, and `verify` provide the
generators, the sweep machinery, and the empirical lemma suites behind the
reproduction experiments; the `covalign` console script fronts all of it.
"""

from .errors import (
    BudgetExceeded,
    ConvergenceFailure,
    CovalignError,
    DimensionTooLarge,
    FileFormatError,
    InvalidInput,
    NonFiniteMatrix,
    NotPositiveDefinite,
    NotSymmetric,
    RejectionBudgetExceeded,
    SinkhornStall,
)
from .gw import (
    COUPLING_TOL,
    GwOptions,
    GwReport,
    MarginalAudit,
    audit_couplings,
    coupling_marginal_error,
    entropic_gw,
    gw_estimate,
    round_coupling,
    sinkhorn_project,
)
from .harness import (
    ESTIMATORS,
    SweepConfig,
    ThresholdConfig,
    TrialRecord,
    mix64,
    run_sweep,
    run_trial,
    sweep_config_from_json,
    threshold_search,
)
from .instances import (
    InstanceSpec,
    hard_instance,
    make_instance,
    rademacher_matrix,
    robinson,
    sign_matrix,
    wishart,
)
from .io import read_matrix_csv, read_meta_json, write_matrix_csv, write_meta_json
from .linalg import (
    as_symmetric,
    cholesky,
    frobenius_norm,
    inner,
    is_permutation,
    perm_apply,
    perm_compose,
    perm_identity,
    perm_invert,
    perm_matrix,
    sym_eigen,
    sym_inv_sqrt,
    sym_inverse,
)
from .model import (
    EXACT,
    AlignmentInstance,
    frob_loss,
    hamming_loss,
    nf_loss,
    qap_objective,
    sample_covariance,
    sample_gaussian,
    trace_loss,
)
from .assignment import AssignmentResult, lap_max
from .search import (
    SearchOptions,
    SearchReport,
    all_swap_deltas,
    exhaustive_search,
    local_search,
    qmle_estimate,
    swap_delta,
)
from .spectral import FiedlerResult, fiedler_order, spectral_estimate
from .verify import (
    SuiteResult,
    VerificationReport,
    check_quadratic_bound,
    check_sandwich,
    check_trace_frobenius,
    format_report,
    verify_lemmas,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "BudgetExceeded",
    "ConvergenceFailure",
    "CovalignError",
    "DimensionTooLarge",
    "FileFormatError",
    "InvalidInput",
    "NonFiniteMatrix",
    "NotPositiveDefinite",
    "NotSymmetric",
    "RejectionBudgetExceeded",
    "SinkhornStall",
    # linear algebra and permutations
    "as_symmetric",
    "cholesky",
    "frobenius_norm",
    "inner",
    "is_permutation",
    "perm_apply",
    "perm_compose",
    "perm_identity",
    "perm_invert",
    "perm_matrix",
    "sym_eigen",
    "sym_inv_sqrt",
    "sym_inverse",
    # model and losses
    "EXACT",
    "AlignmentInstance",
    "frob_loss",
    "hamming_loss",
    "nf_loss",
    "qap_objective",
    "sample_covariance",
    "sample_gaussian",
    "trace_loss",
    # assignment
    "AssignmentResult",
    "lap_max",
    # entropic coupling solver
    "COUPLING_TOL",
    "GwOptions",
    "GwReport",
    "MarginalAudit",
    "audit_couplings",
    "coupling_marginal_error",
    "entropic_gw",
    "gw_estimate",
    "round_coupling",
    "sinkhorn_project",
    # permutation search
    "SearchOptions",
    "SearchReport",
    "all_swap_deltas",
    "exhaustive_search",
    "local_search",
    "qmle_estimate",
    "swap_delta",
    # spectral baseline
    "FiedlerResult",
    "fiedler_order",
    "spectral_estimate",
    # instance generators
    "InstanceSpec",
    "hard_instance",
    "make_instance",
    "rademacher_matrix",
    "robinson",
    "sign_matrix",
    "wishart",
    # harness
    "ESTIMATORS",
    "SweepConfig",
    "ThresholdConfig",
    "TrialRecord",
    "mix64",
    "run_sweep",
    "run_trial",
    "sweep_config_from_json",
    "threshold_search",
    # file formats
    "read_matrix_csv",
    "read_meta_json",
    "write_matrix_csv",
    "write_meta_json",
    # lemma verification
    "SuiteResult",
    "VerificationReport",
    "check_quadratic_bound",
    "check_sandwich",
    "check_trace_frobenius",
    "format_report",
    "verify_lemmas",
]
