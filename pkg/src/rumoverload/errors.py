"""
Exceptions raised by rumoverload
"""


class RumOverloadError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RumOverloadError, ValueError):
    """Input data or configuration is not acceptable."""


class ParseError(ValidationError):
    """
    A row of an input file could not be parsed.

    Attributes:
    line (int): 1-based line number in the file, header included
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SizeGuardError(ValidationError):
    """Refused to enumerate a matrix that would be too large."""


class NumericalError(RumOverloadError, ArithmeticError):
    """A numerical kernel failed."""


class ConvergenceError(NumericalError):
    """
    A solver hit its iteration cap.

    Attributes:
    best (object): best iterate found so far
    residual (float): KKT residual or gap bound at the best iterate
    """

    def __init__(self, message, best=None, residual=float("nan")):
        super().__init__(f"{message} (residual {residual:.3g})")
        self.best = best
        self.residual = residual


class RankError(NumericalError):
    """The rank condition on seeded columns could not be met."""

    def __init__(self, message, rank, required):
        super().__init__(f"{message}: rank {rank} < {required}")
        self.rank = rank
        self.required = required
