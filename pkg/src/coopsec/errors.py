"""Exception hierarchy shared by all modules."""


class SecrecyError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SecrecyError, ValueError):
    pass


class NotHermitian(SecrecyError, ValueError):
    pass


class NotPositiveDefinite(SecrecyError, ValueError):
    pass


class RankDeficient(SecrecyError, ValueError):
    pass


class NonPositiveDistance(SecrecyError, ValueError):
    pass


class InvalidConfig(SecrecyError, ValueError):
    pass


class Infeasible(SecrecyError):
    """The requested design target cannot be met."""


class TargetUnachievable(Infeasible):
    pass


class InsufficientNodes(Infeasible):
    """Fewer than J + 1 cooperating nodes for a nulling design."""


class DegenerateChannel(Infeasible):
    pass


class MaxIterationsExceeded(SecrecyError):
    pass


class ParseError(InvalidConfig):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        loc = f"line {line}, column {column}: " if line else ""
        super().__init__(loc + message)


class UnknownKey(ParseError):
    pass


class UnitError(ParseError):
    pass
