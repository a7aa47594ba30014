"""Exception types shared across the package.

Names are kept short and descriptive of the failure, in the style of
numpy's ``LinAlgError``; the CLI surfaces them verbatim in its error JSON.
"""


class CovalignError(Exception):
    """Base class for all package-specific failures."""


class NotPositiveDefinite(CovalignError):
    """A matrix required to be positive definite is not (pivot or eigenvalue
    at or below the relative floor)."""


class NotSymmetric(CovalignError):
    """Relative asymmetry of an input matrix exceeds tolerance."""


class NonFiniteMatrix(CovalignError):
    """An input matrix contains NaN or infinite entries."""


class ConvergenceFailure(CovalignError):
    """An iterative eigen/linear-algebra routine failed to converge."""


class SinkhornStall(CovalignError):
    """Sinkhorn marginal errors did not reach tolerance within the sweep
    budget."""


class DimensionTooLarge(CovalignError):
    """Exhaustive enumeration requested above the factorial-cost guard."""


class RejectionBudgetExceeded(CovalignError):
    """Rejection sampler exhausted its draw budget without an accept."""


class BudgetExceeded(CovalignError):
    """A search exceeded its resource cap (e.g. sample-size doubling past the
    allowed maximum)."""


class FileFormatError(CovalignError):
    """A matrix CSV or config file failed to parse or violates its format
    contract."""


class InvalidInput(CovalignError):
    """A function precondition was violated by the caller."""
