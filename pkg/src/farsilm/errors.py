"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: usage problems exit 1, anything raised
as a :class:`DataError` or :class:`ConfigError` exits 2.
"""


class FarsilmError(Exception):
    """Base class for all errors raised by this package."""


class DataError(FarsilmError):
    """Malformed or inconsistent input data (files, records, labels)."""


class ConfigError(FarsilmError):
    """Invalid configuration values or incompatible component settings."""


class AdjudicatorError(FarsilmError):
    """A pluggable boundary adjudicator failed while judging a split."""
