"""Exception hierarchy shared by every layer of the package."""


class ArithDKError(Exception):
    """Base class for all errors raised by arithdk."""


class NotDivisible(ArithDKError):
    pass


class InsufficientPrecision(ArithDKError):
    pass


class PrecisionExceeded(ArithDKError):
    """A valuation level at or beyond the working precision was requested."""


class DimensionMismatch(ArithDKError):
    """Operands disagree on prime, precision or number of variables."""


class NotAUnit(ArithDKError):
    pass


class ZeroOperator(ArithDKError):
    pass


class NotUnipotent(ArithDKError):
    pass


class NotInNormalizer(ArithDKError):
    pass


class NotTorsion(ArithDKError):
    pass


class ParseError(ArithDKError):
    """Malformed document. ``where`` names the offending field path."""

    def __init__(self, message, where=None):
        self.where = where
        if where:
            message = f"{where}: {message}"
        super().__init__(message)


class SchemaVersionMismatch(ParseError):
    pass
