"""Exception types shared across the library and mapped to CLI exit codes."""


class ParseError(ValueError):
    """A structured document (instance JSON, PGM header, ...) is malformed."""


class DomainError(Exception):
    """A request is well-formed but outside the operation's domain."""


class UnsupportedFieldError(DomainError):
    """Operation defined for one scalar field only (e.g. real-only theory)."""


class MissingDataError(DomainError):
    """Required optional data (ground truth, noise record) is absent."""
