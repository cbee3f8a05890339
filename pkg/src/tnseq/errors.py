"""Exception hierarchy.

Numerical failures derive from :class:`NumericalError`; the CLI maps that
branch to exit code 2 and :class:`InvalidModel` to exit code 1.
"""


class TnseqError(Exception):
    """Base class for all package errors."""

    tag = "error"


class DimensionMismatch(TnseqError, ValueError):
    tag = "dimension_mismatch"


class InvalidModel(TnseqError, ValueError):
    tag = "invalid_model"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NumericalError(TnseqError, ArithmeticError):
    tag = "numerical_error"


class NonConvergence(NumericalError):
    tag = "non_convergence"


class DegenerateSpectrum(NumericalError):
    tag = "degenerate_spectrum"


class NotHermitian(NumericalError):
    tag = "not_hermitian"


class NotPositiveDefinite(NumericalError):
    tag = "not_positive_definite"


class NotCompletelyPositive(NumericalError):
    tag = "not_completely_positive"


class OrthogonalBoundary(NumericalError):
    tag = "orthogonal_boundary"


class ZeroProbabilityPrefix(NumericalError):
    tag = "zero_probability_prefix"


class NegativeConditional(NumericalError):
    tag = "negative_conditional"


class TooLarge(TnseqError, ValueError):
    tag = "too_large"


class UnsupportedOperation(TnseqError, TypeError):
    tag = "unsupported"


class ComplexScoreWarning(UserWarning):
    """A PSR/uMPS score had a non-negligible imaginary part."""


class NegativeScoreWarning(UserWarning):
    """A PSR/uMPS score was negative (the negative probability problem)."""


class ModelFileError(TnseqError, ValueError):
    """Malformed or inconsistent model file."""

    tag = "parse_error"
