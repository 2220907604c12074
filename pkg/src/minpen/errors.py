"""Exception types shared across the package.

The CLI maps InputError to exit code 2 and NumericError (including
CalibrationError) to exit code 3.
"""


class InputError(ValueError):
    """Malformed or inconsistent user input (shapes, domains, file formats)."""


class NumericError(RuntimeError):
    """A numeric procedure failed (eigensolver breakdown, bad conditioning)."""


class CalibrationError(NumericError):
    """The variance-calibration sweep could not locate a complexity jump.

    Raised when every candidate penalty level still selects a model with
    df >= n/2, which means the candidate grid is too narrow for the data.
    Never downgraded to a silent fallback.
    """

    def __init__(self, message, directions=None):
        super().__init__(message)
        self.directions = list(directions) if directions else []
