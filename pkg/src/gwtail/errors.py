"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested formula."""


class QuadratureError(RuntimeError):
    """Adaptive integration ran out of its panel budget.

    The partial estimate is attached so callers can still inspect it.
    """

    def __init__(self, message, log_value=float("nan"), rel_error=float("inf"), panels=0):
        super().__init__(message)
        self.log_value = log_value
        self.rel_error = rel_error
        self.panels = panels


class BracketError(ValueError):
    """A root could not be bracketed inside the search ceiling."""
