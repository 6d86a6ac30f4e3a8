"""Exception types shared across the package."""


class LceError(Exception):
    """Base class for all package errors."""


class DomainError(LceError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class PreconditionError(LceError, ValueError):
    """Inputs violate an operation's stated precondition."""


class BudgetExceeded(LceError):
    """An exhaustive computation would exceed its configured size budget."""


class SamplerNotInitialized(LceError):
    pass


class UnboundedPolytope(LceError):
    pass


class DegenerateBody(LceError):
    pass


class IsotropizationFailed(LceError):
    def __init__(self, message, best_residual, result=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.result = result


class ConfigError(LceError):
    """Invalid experiment configuration; ``line`` anchors it in the source file."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
