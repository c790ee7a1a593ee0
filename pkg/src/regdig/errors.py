"""Exception hierarchy shared by every module."""


class RegdigError(Exception):
    """Base class for all errors raised by this package."""


class NotPrimeError(RegdigError, ValueError):
    pass


class BadEpsError(RegdigError, ValueError):
    pass


class BadResidueError(RegdigError, ValueError):
    pass


class TooLargeError(RegdigError, ValueError):
    """An exhaustive computation would exceed its enumeration budget."""


class IdentityViolatedError(RegdigError, ArithmeticError):
    """An exact identity that must hold failed; indicates a bug."""


class RejectionBudgetError(RegdigError, RuntimeError):
    pass


class NoPrimesError(RegdigError, ValueError):
    pass


class DimensionError(RegdigError, ValueError):
    pass


class NotCenteredError(RegdigError, ValueError):
    pass


class NotProportionalError(RegdigError, ArithmeticError):
    pass


class OutOfRegimeError(RegdigError, ValueError):
    pass


class ExcludedProfileError(RegdigError, ValueError):
    pass


class BadSimplexError(RegdigError, ValueError):
    pass


class NoConvergeError(RegdigError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class QuadratureError(RegdigError, RuntimeError):
    pass


class IoError(RegdigError, OSError):
    pass
