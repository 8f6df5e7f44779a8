# errors.py

class KellyError(Exception):
    """Base class for every error raised by the allocation engine."""


class ValidationError(KellyError, ValueError):
    """Invalid input: models, moment sets, spec files, grids.

    `field` is a dotted path to the offending entry (e.g. ``assets[1].sigma``)
    and `line` the 1-based line in the source file when known.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        super().__init__(message)

    def __str__(self):
        message = super().__str__()
        prefix = ''
        if self.line is not None:
            prefix += f"line {self.line}: "
        if self.field is not None:
            prefix += f"{self.field}: "
        return prefix + message


class DomainError(ValidationError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedModelError(ValidationError):
    """Model family, dependence or dimension not handled by the routine."""


class AdmissibilityError(ValidationError):
    """Fraction vector with a non-positive wealth factor somewhere on the support."""


class InsufficientDataError(ValidationError):
    pass


class SolverError(KellyError, RuntimeError):
    """Numerical failure of a solver."""


class NoSolutionError(SolverError):
    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class ConvergenceError(SolverError):
    def __init__(self, message, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} after {iterations} iterations (last residual {residual:.3e})")
