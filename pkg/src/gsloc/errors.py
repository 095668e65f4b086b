"""Exception types shared across the package."""


class GslocError(Exception):
    """Base class for all gsloc errors."""


class DataError(GslocError, ValueError):
    """Invalid input data: bad dimensions, malformed files, broken invariants.

    ``line`` is the 1-based line number for file parse errors, when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class SolverDivergenceError(GslocError, RuntimeError):
    """The objective increased beyond numerical slack; indicates an internal bug."""
