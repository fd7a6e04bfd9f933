"""Exception types raised by the vexp kernel.

Two families matter to callers: input problems (``InputError``, which the
CLI maps to exit code 2) and numerical failures (``NumericalError``, exit
code 3).
"""


class VexpError(Exception):
    """Base class for all vexp errors."""


class InputError(VexpError, ValueError):
    """Malformed or inconsistent input."""


class NumericalError(VexpError, ArithmeticError):
    """A computation could not be completed."""


class SpecOutOfRange(InputError):
    pass


class GridMismatch(InputError):
    pass


class NotInClassP(InputError):
    pass


class BadBounds(InputError):
    pass


class QPlusInfinite(InputError):
    pass


class InfiniteExponent(InputError):
    """Raised where an algorithm needs finite exponents everywhere."""


class GridTooSmall(InputError):
    pass


class NonFinite(NumericalError):
    pass


class BracketFailure(NumericalError):
    pass


class TooLargeForBrute(NumericalError):
    pass


class NotNormable(NumericalError):
    pass
