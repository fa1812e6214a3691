"""Exception types shared by the library and the CLI exit-code mapping."""


class ValidationError(ValueError):
    """A parameter or input violates a documented precondition."""


class GuardExceeded(RuntimeError):
    """An exhaustive enumeration would exceed its configured size guard."""


class InvariantViolation(AssertionError):
    """An internal structural check failed (indicates a bug, not bad input)."""
