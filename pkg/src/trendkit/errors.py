"""Exception types shared across trendkit modules."""


class TrendkitError(Exception):
    """Base class for user/data errors raised by trendkit.

    The CLI maps these to exit code 1; anything else is treated as an
    internal failure (exit code 2).
    """


class DivergenceError(TrendkitError):
    """A recursive forecast blew up; carries the step index where it happened."""

    def __init__(self, step: int, message: str):
        super().__init__(message)
        self.step = step
