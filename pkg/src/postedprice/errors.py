"""Exception types shared across the package."""


class InvalidInstanceError(ValueError):
    """Malformed distribution, instance, or mechanism."""


class BudgetExceededError(RuntimeError):
    """An enumeration or DP table would exceed its configured budget."""
