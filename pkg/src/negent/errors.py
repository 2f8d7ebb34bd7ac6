"""Exception hierarchy.

Each family maps onto a CLI exit code: configuration problems (2), numeric
refusals such as overflow guards or Fermi-level ties (3), and solver
failures (4).
"""


class NegentError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(NegentError, ValueError):
    exit_code = 2


class NumericRefusal(NegentError, ArithmeticError):
    """A computation was refused because its result would be unreliable."""

    exit_code = 3


class RangeError(NumericRefusal):
    """A quantity would leave the double-precision range."""

    def __init__(self, message, log_magnitude=None):
        super().__init__(message)
        self.log_magnitude = log_magnitude


class FermiTieError(NumericRefusal):
    """An eigenvalue sits on the Fermi level, so the occupation is ambiguous."""

    def __init__(self, message, energy=None, k=None):
        super().__init__(message)
        self.energy = energy
        self.k = k


class NotApplicableError(NumericRefusal):
    """The requested diagnostic does not apply in this parameter regime."""


class SingularTransformError(NotApplicableError):
    pass


class DegeneracyError(NumericRefusal):
    pass


class SolverError(NegentError, RuntimeError):
    exit_code = 4


class DecompositionError(SolverError):
    def __init__(self, message, size=None, condition=None):
        super().__init__(message)
        self.size = size
        self.condition = condition


class ClassificationError(SolverError):
    """EP dispersion classification failed; the raw fit is attached."""

    def __init__(self, message, exponent=None, fit=None):
        super().__init__(message)
        self.exponent = exponent
        self.fit = fit
