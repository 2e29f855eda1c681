"""Exception types shared across the package."""


class FscapError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(FscapError):
    pass


class RowSumError(FscapError):
    pass


class NegativeProbability(FscapError):
    pass


class UnknownChannel(FscapError):
    pass


class MissingParam(FscapError):
    pass


class ParamOutOfRange(FscapError):
    pass


class EnumerationCapExceeded(FscapError):
    pass


class AlphabetMismatch(FscapError):
    pass


class NotAPmf(FscapError):
    pass


class AxisOverlap(FscapError):
    pass


class BudgetExceeded(FscapError):
    pass


class ImpossibleOutput(FscapError):
    pass


class NotConnected(FscapError):
    pass


class IncompleteLabeling(FscapError):
    pass


class Disconnected(FscapError):
    pass


class NotUnique(FscapError):
    pass


class UnknownGraph(FscapError):
    pass


class ParseError(FscapError):
    pass
