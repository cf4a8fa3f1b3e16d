"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when user-supplied data or parameters fail validation.

    The CLI maps this to exit code 2 (user/input error); everything else
    surfaces as exit code 1 (internal error).
    """
