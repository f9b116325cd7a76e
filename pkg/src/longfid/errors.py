"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 1,
data validation problems with 2, anything unexpected with 3.
"""


class LongfidError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(LongfidError):
    """A parameter, flag, or config document is out of its documented range."""


class DataError(LongfidError):
    """Input data violates a contract (bad rows, mismatched kinds, empty series)."""
