"""Exception types shared across the package."""


class RainblendError(Exception):
    """Base class for all rainblend errors."""


class DataError(RainblendError):
    """Invalid, inconsistent or malformed input data."""


class NumericError(RainblendError):
    """A numeric computation failed or produced non-finite values."""
