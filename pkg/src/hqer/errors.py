"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: configuration problems exit with 2,
data problems with 3, and a solver that fails to converge with 4.
"""


class HQERError(Exception):
    """Base class for all package errors."""


class DomainError(HQERError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedError(HQERError, ValueError):
    """The requested law or feature is not available for this operation."""


class NumericError(HQERError, ArithmeticError):
    """Quadrature or root finding broke down."""


class ModelError(HQERError, ValueError):
    """The regression design is unusable (rank deficient, too few rows)."""


class ConfigError(HQERError, ValueError):
    """Invalid user configuration, e.g. a missing CSV column or bad flag."""


class DataError(HQERError, ValueError):
    """Input data cannot be used, e.g. no complete rows."""


class ConvergenceError(HQERError, RuntimeError):
    """A solver exhausted its iteration budget."""
