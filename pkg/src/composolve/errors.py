"""Exception types raised by the solvers and builders."""


class ParameterError(ValueError):
    """A parameter is outside its admissible domain."""


class UnsupportedError(ValueError):
    """An operation is not available for the given regularizer or problem."""

    def __init__(self, message, kind=None):
        super().__init__(message)
        self.kind = kind


class NonConvergenceError(RuntimeError):
    """An iterative method hit its iteration cap before its exit test passed.

    Carries the last iterate, the last residual and, when the failing
    routine records one, the partial trace.
    """

    def __init__(self, message, x=None, residual=None, trace=None, outer_index=None):
        super().__init__(message)
        self.x = x
        self.residual = residual
        self.trace = trace
        self.outer_index = outer_index


class DivergenceError(RuntimeError):
    """Iterates blew up; usually the step sizes are too large."""

    def __init__(self, message, k=None, trace=None):
        super().__init__(message)
        self.k = k
        self.trace = trace


class NotStronglyConvexError(ParameterError):
    """A strongly convex method was handed an objective with ``mu_f = 0``."""
