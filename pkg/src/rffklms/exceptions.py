"""Exception types raised by the library."""


class DimensionError(ValueError):
    """An input vector does not match the expected dimension."""


class PoisonedStreamError(ValueError):
    """A non-finite sample reached a filter."""


class NumericalBreakdownError(ArithmeticError):
    """A recursion lost positive-definiteness or produced non-finite state."""


class BoundViolationError(ValueError):
    """A step size lies outside the stability range predicted by the theory."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not meet its tolerance within the iteration budget."""
