"""Exception hierarchy shared by the library and the CLI exit codes."""


class YieldflowError(Exception):
    """Base class for all package errors."""


class DomainError(YieldflowError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class GeometryError(DomainError):
    """A point lies outside the region a chart or barrier is defined on."""


class ConvergenceError(YieldflowError, RuntimeError):
    """An iteration failed to reach its tolerance.

    ``iterations`` and ``residual`` carry the diagnostics at the point of
    failure when they are known.
    """

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
