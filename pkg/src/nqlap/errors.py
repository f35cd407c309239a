"""Exception types shared across the package."""


class NqlapError(Exception):
    """Base class for all package errors."""


class ParameterError(NqlapError):
    """Invalid equation parameters."""


class BOutOfRange(ParameterError):
    pass


class QTooSmall(ParameterError):
    pass


class POutOfRange(ParameterError):
    pass


class InvalidGrid(NqlapError):
    pass


class ZeroField(NqlapError):
    pass


class NegativeValues(NqlapError):
    pass


class NonFiniteEnergy(NqlapError):
    pass


class NoConvergence(NqlapError):
    pass


class InvalidRegime(NqlapError):
    pass


class RegimeMismatch(NqlapError):
    pass


class BracketNotFound(NqlapError):
    pass


class BracketInvalid(NqlapError):
    pass


class StiffFailure(NqlapError):
    pass


class DegenerateComponents(NqlapError):
    pass
