"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the set on which an operation is defined."""


class NumericError(ArithmeticError):
    """A numerical procedure failed (non-finite values, no convergence)."""


class NoOrbitError(NumericError):
    """Not enough section crossings were found to identify a periodic orbit."""
