"""Exception types shared across the package."""


class InvwaveError(Exception):
    """Base class for all errors raised by invwave."""


class ParameterDomainError(InvwaveError, ValueError):
    """A model parameter lies outside the admissible domain."""


class PreconditionError(InvwaveError, ValueError):
    """An operation was called with inputs that violate its preconditions."""


class SolverFailure(InvwaveError, RuntimeError):
    """An iterative solver did not converge.

    ``residual`` carries the last residual (or sup-change) observed and
    ``trace`` any partial history the caller may want to persist.
    """

    def __init__(self, message, residual=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace


class PostconditionError(InvwaveError, RuntimeError):
    """A converged result failed a structural check (e.g. monotonicity)."""


class ConstructionFailure(InvwaveError, RuntimeError):
    """An upper/lower solution could not be assembled (shift search failed)."""


class StabilityError(InvwaveError, RuntimeError):
    """A time step left the invariant region; a smaller dt is needed."""
