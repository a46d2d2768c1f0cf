class CausalDQError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(CausalDQError, ValueError):
    """Raised when an input violates an operation's precondition."""


class NumericalError(CausalDQError, ArithmeticError):
    """Raised on singular systems, non-finite values or non-convergence."""
