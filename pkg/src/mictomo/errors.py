"""Exception types shared across the package.

The CLI maps :class:`ValidationError` to exit code 2 and
:class:`NumericalError` to exit code 3.
"""


class ValidationError(ValueError):
    """An input violates a documented precondition or invariant."""


class NumericalError(ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""
