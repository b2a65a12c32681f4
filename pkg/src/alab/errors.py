"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
data problems (missing/malformed/unfetchable datasets) with 3, and any
other failure with 4.
"""


class AlabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(AlabError):
    """Invalid configuration value or malformed config file."""


class ContractViolation(AlabError):
    """A documented precondition of an operation was violated by the caller."""


class DataError(AlabError):
    """Problem with dataset content or availability."""


class DataFormatError(DataError):
    """Malformed IDX file; the message names the offending field."""


class FetchError(DataError):
    """Dataset retrieval failed; the local cache is left unchanged."""
