"""Exception hierarchy for the edr/PAV toolkit."""


class EdrPavError(Exception):
    """Base class for all errors raised by this package."""


class ZeroColumn(EdrPavError, ValueError):
    pass


class NumericalFailure(EdrPavError, ArithmeticError):
    pass


class EmptyGrid(EdrPavError, ValueError):
    pass


class NonpositiveTuning(EdrPavError, ValueError):
    pass


class ZeroEstimate(EdrPavError, ValueError):
    """The estimate has (numerically) zero norm, so the edr mapping and the
    correlation factor are undefined."""


class EmptyPath(EdrPavError, ValueError):
    pass


class NoAdmissiblePoint(EdrPavError, ValueError):
    pass


class InvalidParameter(EdrPavError, ValueError):
    pass


class ParseError(EdrPavError, ValueError):
    """Malformed delimited-text input; carries the offending location."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class RaggedRows(ParseError):
    pass


class NonNumericCell(ParseError):
    pass
