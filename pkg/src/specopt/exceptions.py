"""Exception hierarchy shared by every module of the package."""


class SpecoptError(Exception):
    """Base class for all package errors."""


class DomainError(SpecoptError, ValueError):
    """An argument lies outside the domain of a mathematical operation."""


class UnsupportedOperation(SpecoptError, TypeError):
    """The problem oracle lacks the capability an operation needs."""


class PreconditionError(SpecoptError, ValueError):
    """A documented precondition of an operation does not hold."""


class FDConvergenceError(SpecoptError, RuntimeError):
    """The finite-difference estimator did not stabilize.

    Attributes
    ----------
    estimates : tuple of float
        The last two estimates produced before giving up.
    """

    def __init__(self, message, estimates):
        super().__init__(message)
        self.estimates = tuple(estimates)


class DivergedError(SpecoptError, RuntimeError):
    """An optimizer produced a non-finite value or direction.

    The partial trace up to (and excluding) the offending iterate is kept
    on ``trace`` so callers can still report the best value found.
    """

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace
