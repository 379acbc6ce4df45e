"""Numerical toolkit for stability of extremes of a random number of draws."""

from .errors import (
    CoefficientPrecisionWarning,
    ConvergenceError,
    DegenerateFitError,
    DomainError,
    NStableError,
    PreconditionError,
    SamplerTruncationError,
)
from .pgf_core import (
    Family,
    PgfSpec,
    compose_pgf,
    eval_pgf,
    extract_coefficients,
    invert_pgf,
    validate_pgf,
)

__version__ = "0.1.0"
