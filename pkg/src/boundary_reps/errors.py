"""Exception types raised across the package."""


class PreconditionError(ValueError):
    """An operation was called outside its domain (level too small, bad t, ...)."""


class DivergenceError(ArithmeticError):
    """A quantity that only exists for t > 0 was requested at t <= 0."""


class BudgetError(OverflowError):
    """An enumeration or matrix would exceed the configured size budget."""


class ConvergenceError(RuntimeError):
    """An iterative refinement did not settle within its level budget.

    The last two iterates are kept on the exception for diagnostics.
    """

    def __init__(self, message, previous=None, last=None):
        super().__init__(message)
        self.previous = previous
        self.last = last


class ConfigError(ValueError):
    """Invalid run configuration.  ``key``/``line``/``column`` locate the problem."""

    def __init__(self, message, key=None, line=None, column=None):
        super().__init__(message)
        self.key = key
        self.line = line
        self.column = column
