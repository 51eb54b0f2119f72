"""Exception types shared across the suite."""


class SingularMatrixError(Exception):
    """A pivot fell below the scale-relative threshold during factorization."""


class NoConvergenceError(Exception):
    """Eigenvalue iteration failed; carries the best available estimate."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ZeroStartVectorError(Exception):
    """The Arnoldi start vector has (numerically) zero norm."""


class JvpFailureError(Exception):
    """The user-supplied Jacobian-vector product raised or returned non-finite data."""


class NonFiniteError(Exception):
    """A stage produced NaN/Inf; signals the driver to shrink the step."""


class StepSizeUnderflowError(Exception):
    """The step controller pushed h below h_min without an accepted step."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DimensionMismatchError(ValueError):
    """Vector/matrix sizes are inconsistent with the factorization or basis."""
