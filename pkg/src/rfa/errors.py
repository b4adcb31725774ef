"""Exception types shared across the package."""


class RfaError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(RfaError, ValueError):
    """Malformed input file.

    Attributes:
        path: File that failed to parse (may be None for in-memory input).
        lineno: 1-based line number of the offending line, if known.
    """

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class DomainError(RfaError, ValueError):
    """Arguments outside the valid domain of an operation."""


class NumericError(RfaError, ArithmeticError):
    """Non-finite values appeared during a numerical computation."""
