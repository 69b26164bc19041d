"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An operation was called with inputs that violate its stated precondition."""
