"""Exception hierarchy shared across the package."""


class LdiError(Exception):
    """Base class for all package errors."""


class DataError(LdiError):
    """Bad input data or an operation precondition violated by the data."""


class ParseError(DataError):
    """Malformed CSV input (carries the offending row/line in the message)."""


class SchemaError(DataError):
    """Invalid or inconsistent table schema."""


class BackendError(LdiError):
    """Base class for completion-backend failures."""


class ConfigurationError(BackendError):
    """Non-transient backend misconfiguration (bad key, bad endpoint)."""


class TransportError(BackendError):
    """Transient transport failures exhausted the retry budget."""

    def __init__(self, message: str, last_status: int | None = None):
        super().__init__(message)
        self.last_status = last_status


class OracleMissError(BackendError):
    """The mock backend found no example sharing evidence with the query."""
