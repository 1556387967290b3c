"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`PinningError`
and carries an ``exit_code`` used by the command line front-end.
"""


class PinningError(Exception):
    exit_code = 1


class ConfigError(PinningError, ValueError):
    exit_code = 2


class DomainError(PinningError, ValueError):
    """Argument outside the domain where a quantity is defined."""

    exit_code = 2


class SizeError(PinningError, ValueError):
    exit_code = 2


class CertificationError(PinningError):
    """A potential spec failed one of the integrability / growth checks."""

    exit_code = 3

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = tuple(failures)


class SpecError(CertificationError):
    """A downstream operation refused a flagged (non-certified) spec."""


class NumericalError(PinningError, ArithmeticError):
    exit_code = 4


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None, n_iter=None):
        super().__init__(message)
        self.residual = residual
        self.n_iter = n_iter


class AccuracyError(NumericalError):
    pass


class RangeError(NumericalError, IndexError):
    """Requested index not covered by a precomputed table."""


class ConsistencyError(NumericalError):
    pass


class DataError(NumericalError):
    """Input table contains unusable (non-finite) entries."""
