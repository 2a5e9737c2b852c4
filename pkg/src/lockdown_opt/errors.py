"""Exception hierarchy shared by all solver modules."""


class LockdownOptError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(LockdownOptError, ValueError):
    """An input violates a documented precondition."""


class DomainError(PreconditionError):
    """A function was evaluated outside its mathematical domain."""


class IntegrationError(LockdownOptError, ArithmeticError):
    """The RK4 integrator produced a non-finite state (usually dt too large)."""


class GridMismatchError(LockdownOptError, ValueError):
    """A control breakpoint or horizon cannot be placed on the time grid."""


class BracketError(LockdownOptError, ArithmeticError):
    """A root bracket has no sign change."""


class UnderflowError(LockdownOptError, ArithmeticError):
    """The infected fraction reached numerical zero where a quotient needs it."""


class UnreachableTargetError(LockdownOptError):
    """The requested distance to herd immunity cannot be reached."""
