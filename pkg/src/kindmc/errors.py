"""Exception types shared across the package."""

from __future__ import annotations


class KindmcError(Exception):
    """Base class for all errors raised by this package."""


class SortError(KindmcError):
    """An expression was built or used with incompatible sorts."""


class ValidationError(KindmcError):
    """A system, trace, or state failed a structural well-formedness check."""


class ParseError(KindmcError):
    """Input text could not be parsed. Carries a source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0) -> None:
        self.line = line
        self.col = col
        self.message = message
        if line:
            super().__init__(f"{line}:{col}: {message}")
        else:
            super().__init__(message)


class ConfigError(KindmcError):
    """A configuration value is unusable (caps exceeded, bad backend string...)."""


class ProtocolError(KindmcError):
    """An external solver or a model violated the expected contract."""


class InternalError(KindmcError):
    """An invariant the package itself must maintain was broken."""


class DiscrepancyError(KindmcError):
    """Plain and extended mode disagreed on bug vs. correct for the same system."""

    def __init__(self, message: str, record: object = None) -> None:
        super().__init__(message)
        self.record = record
