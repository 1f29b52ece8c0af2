"""Exception taxonomy shared by the whole package.

Three failure classes map onto three distinct CLI exit codes: bad
configuration, bad data, and numeric breakdown.
"""


class EmogenError(Exception):
    """Base class for all package errors."""


class ConfigError(EmogenError):
    """Invalid configuration: manifest values, model shapes, flag misuse."""


class DataError(EmogenError):
    """Invalid data: unparseable files, bad labels, length mismatches."""


class NumericError(EmogenError):
    """Numeric domain violation: non-finite values, empty reductions."""
