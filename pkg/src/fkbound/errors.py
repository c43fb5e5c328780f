"""Exception taxonomy shared by all fkbound modules.

The CLI maps these onto exit codes: validation problems exit 2, numerical
failures exit 3, and failed verification assertions exit 4.
"""


class FkboundError(Exception):
    """Base class for all package errors."""


class DomainError(FkboundError):
    """Input outside the validity range of an operation (exit code 2)."""


class NonIntegrable(FkboundError):
    """A requested (weighted) norm integral diverges.

    Raised instead of silently truncating; the message names the offending
    integrand.
    """


class NumericalFailure(FkboundError):
    """Base for solver/quadrature breakdowns (exit code 3)."""


class QuadratureFailure(NumericalFailure):
    """Adaptive quadrature could not meet its tolerance."""


class StepSizeFailure(NumericalFailure):
    """ODE residual target unmet at maximum refinement."""


class NoConvergence(NumericalFailure):
    """Iterative solver hit its iteration cap before the tolerance."""


class GridTooSmall(NumericalFailure):
    """Variational grid does not contain the solution mass."""


class NoLinearSlope(FkboundError):
    """log-bound grows superlinearly in T, so no finite energy bound exists."""


class NotPositiveDefinite(DomainError):
    """Coupling variant has no symmetric positive definite extension."""


class VerificationError(FkboundError):
    """A cross-check inequality failed (exit code 4)."""
