"""Exception types shared across the package.

The CLI maps these onto its exit-code contract, so new error conditions
should reuse one of these classes rather than raising bare ValueErrors.
"""


class RandlabError(Exception):
    """Base class for all randlab errors."""


class ParseError(RandlabError):
    """Syntax error in a formula, structure file, or workspace file."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class ResolutionError(RandlabError):
    """A named object (symbol, workspace entry, file) could not be resolved."""


class BudgetError(RandlabError):
    """An exhaustive enumeration would exceed the configured budget."""

    def __init__(self, message: str, required: int):
        self.required = required
        super().__init__(f"{message} (required count {required})")


class ValidationError(RandlabError):
    """Arguments violate a documented precondition or invariant."""
