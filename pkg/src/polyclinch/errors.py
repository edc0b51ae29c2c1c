"""Exception hierarchy shared across the package."""


class ClinchError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ClinchError, ValueError):
    """An argument is outside the domain an operation accepts."""


class SizeError(ClinchError):
    """A brute-force enumeration cap was exceeded, or a dimension is unsupported."""


class PreconditionError(DomainError):
    """A documented precondition failed; carries a machine-checkable witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DivergenceError(ClinchError):
    """An auction exceeded its step budget without demands reaching zero."""


class ParseError(DomainError):
    """An instance file failed validation; carries an error code and field path."""

    def __init__(self, code, field, message):
        super().__init__(message)
        self.code = code
        self.field = field
