"""Exception taxonomy.

Two families, matching the CLI exit codes: bad input (exit 2) and
numerical failure (exit 3).
"""


class TromError(Exception):
    """Base class for all package errors."""


class InputError(TromError):
    """Caller passed something malformed; maps to CLI exit code 2."""


class NumericalError(TromError):
    """A computation failed numerically; maps to CLI exit code 3."""


# -- input family ------------------------------------------------------------

class InvalidDimension(InputError):
    pass


class InvalidMode(InputError):
    pass


class InvalidInput(InputError):
    pass


class InvalidRank(InputError):
    pass


class InvalidRanks(InputError):
    pass


class InvalidTolerance(InputError):
    pass


class InvalidGrid(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class RankBudgetExceeded(InputError):
    pass


class NotOnGrid(InputError):
    pass


class OutOfDomain(InputError):
    pass


class StencilTooLarge(InputError):
    pass


class OverflowRisk(InputError):
    pass


class ZeroDenominator(InputError):
    pass


# -- numerical family --------------------------------------------------------

class AlsDiverged(NumericalError):
    pass


class DegenerateNeighborhood(NumericalError):
    pass


class SingularStep(NumericalError):
    pass
