"""Exception hierarchy for borellab.

Every failure mode that callers are expected to handle gets its own class;
plain ValueError is reserved for violated call preconditions (caller bugs).
"""


class BorellabError(Exception):
    """Base class for all borellab-specific failures."""


class HPOverflowError(BorellabError):
    """A finite-value invariant was violated (inf/nan appeared, or a
    LogMagnitude was converted whose magnitude exceeds the safe range)."""


class PoleAtNonPositiveIntegerError(BorellabError):
    """Gamma evaluated at (or within tolerance of) 0, -1, -2, ..."""


class PoleAtPositiveIntegerError(BorellabError):
    """A solution with poles on the positive integers was evaluated too
    close to one of them."""


class SlowConvergenceError(BorellabError):
    """A series did not meet its truncation criterion within the term cap."""


class OnBranchCutError(BorellabError):
    """Inversion requested on the branch cut with no side specified."""


class NoConvergenceError(BorellabError):
    """Newton iteration failed to converge within its iteration cap."""


class NearCriticalPointError(BorellabError):
    """Inversion requested too close to a critical value for the requested
    mode to make sense."""


class TailBoundViolatedError(BorellabError):
    """A ray's analytic tail bound at its truncation radius exceeds the
    requested tolerance."""


class BudgetExhaustedError(BorellabError):
    """Adaptive quadrature ran out of refinement budget.  The partial result
    is attached as .result (best value + error estimate)."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class BarrierProximityError(BorellabError):
    """Evaluation requested inside the guard band around the singularity
    barrier Re p = 1."""


class RayDivergenceError(BorellabError):
    """The exponential factor fails to decay along the chosen contour rays."""


class BranchPointTooCloseError(BorellabError):
    """A contour cannot clear the branch point of the inverse map."""


class ZeroOnBoundaryError(BorellabError):
    """Argument-principle counting aborted: the function is too small
    somewhere on the rectangle boundary."""


class NonIntegerWindingError(BorellabError):
    """The winding number failed to stabilize on an integer."""


class NoInteriorMinimumError(BorellabError):
    """Least-term truncation found no interior minimum below the order cap."""
