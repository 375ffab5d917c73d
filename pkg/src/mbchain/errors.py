"""Exception types shared across the package."""


class MbchainError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(MbchainError):
    """Invalid or inconsistent run configuration."""


class DomainError(MbchainError, ValueError):
    """Argument outside the mathematical domain of a routine."""


class NonFiniteError(MbchainError, ArithmeticError):
    """A moment became NaN or Inf during integration (usually: reduce dt)."""


class NoConvergenceError(MbchainError, RuntimeError):
    """An iterative solver exhausted its iteration budget.

    The last residual is carried in ``residual`` when available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InsufficientDataError(MbchainError, ValueError):
    """Not enough usable data points for a fit or average."""


class TruncationLeakError(MbchainError, RuntimeError):
    """Population leaked into the top of a truncated number basis."""
