"""Exception types shared across the toolkit."""


class WbandivError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(WbandivError):
    """A record CSV row could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(ParseError):
    """A row is well-formed but violates the node/role schema."""


class ConfigurationError(WbandivError):
    """A parameter value is outside its documented range."""


class MissingLinkError(WbandivError):
    """Neither direction of a node pair was measured."""


class RoleError(WbandivError):
    """A node was used in a role it cannot fill (e.g. receiver as source)."""


class EmptySelectionError(WbandivError):
    """A source/destination selection matched no analyzable pairs."""


class UndefinedMetricError(WbandivError):
    """A metric was requested on input too short to define it."""


class CurveNotCrossedError(WbandivError):
    """An outage curve never reaches the requested probability."""
