"""Exception hierarchy shared across the package."""


class DataminError(Exception):
    """Base class for all package errors."""


class ParseError(DataminError):
    """A cell could not be parsed; message names row and column."""


class SchemaError(DataminError):
    """Schema config does not match the data (unknown column, bad kind, ...)."""


class ConfigError(DataminError):
    """Invalid run configuration."""


class EmptyDatasetError(DataminError):
    """An operation produced or received a dataset with no usable records."""


class OracleError(DataminError):
    """The prediction oracle is unavailable or failed."""


class OracleProtocolError(OracleError):
    """The oracle answered, but violated the protocol (wrong count, unknown label)."""


class ConsistencyError(DataminError):
    """A record value is inconsistent with the generalization it is scored against."""


class IterationCapError(DataminError):
    """Minimization hit its safety iteration cap; carries the partial trace."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = tuple(trace)


class SessionError(DataminError):
    """Base class for personalized-minimization session errors."""


class SessionNotFoundError(SessionError):
    """Unknown or expired session id."""


class SessionProtocolError(SessionError):
    """Answer violates the session protocol (stale option, repeated feature, ...)."""
