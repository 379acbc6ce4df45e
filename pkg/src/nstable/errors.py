"""Exception and warning types."""


class NStableError(Exception):
    """Base class for package errors."""


class DomainError(NStableError, ValueError):
    """Argument or parameter outside the domain of a family."""


class ConvergenceError(NStableError, RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class DegenerateFitError(NStableError, RuntimeError):
    """Affine fit is singular or gives a non-positive scale."""


class PreconditionError(NStableError, RuntimeError):
    """Inputs do not satisfy an operation's stated precondition."""


class SamplerTruncationError(NStableError, RuntimeError):
    """A count sampler cannot represent the law within its truncation budget."""


class CoefficientPrecisionWarning(UserWarning):
    """Extracted power-series coefficient is negative beyond the noise floor."""
