"""Exception types raised across the pipeline."""


class HyperFiedlerError(Exception):
    """Base class for all package errors."""


# -- input / ingestion ------------------------------------------------------

class InputError(HyperFiedlerError):
    """Bad or unreadable input data (CLI exit code 2)."""


class ParseError(InputError):
    def __init__(self, message, row=None, col=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if col is not None:
            loc.append(f"col {col}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.col = col


class CalendarError(InputError):
    pass


class UnknownTone(InputError):
    pass


class MissingTickerSector(InputError):
    pass


class DegeneratePanel(InputError):
    pass


class AlignmentError(HyperFiedlerError):
    """Calendars do not line up (CLI exit code 3)."""


# -- numerics ---------------------------------------------------------------

class NumericalError(HyperFiedlerError):
    """Numerical failure (CLI exit code 4)."""


class RankDeficientFactors(NumericalError):
    pass


class EmptyWindow(NumericalError):
    pass


class EmptyHypergraph(NumericalError):
    pass


class EmptyGraph(NumericalError):
    pass


class NonConvergence(NumericalError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CollinearDesign(NumericalError):
    def __init__(self, message, columns=()):
        super().__init__(f"{message}: {', '.join(columns)}" if columns else message)
        self.columns = tuple(columns)


class DegenerateSample(NumericalError):
    pass


class InvalidCovariance(NumericalError):
    pass


class Singular(NumericalError):
    pass


class TooLarge(HyperFiedlerError):
    pass


class MissingResults(InputError):
    pass
