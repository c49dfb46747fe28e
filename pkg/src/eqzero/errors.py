"""Exception hierarchy shared by the numerical modules and the CLI."""


class EqzeroError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(EqzeroError, ValueError):
    """Malformed user input (domain files, weight specs, CLI arguments)."""


class NumericalError(EqzeroError, ArithmeticError):
    """A computation could not be carried out to the requested accuracy."""


class NonConvergence(NumericalError):
    pass


class LengthMismatch(EqzeroError, ValueError):
    pass


class DegenerateBoundary(NumericalError):
    """The Laurent data does not describe a univalent exterior map."""


class MapInversionFailure(NumericalError):
    pass


class WeightNotPositive(ConfigError):
    pass


class QuadratureTooCoarse(EqzeroError, ValueError):
    pass


class NumericalBreakdown(NumericalError):
    pass


class GridTooCoarse(EqzeroError, ValueError):
    pass


class NearDiagonal(NumericalError):
    """Two scaled points are too close for the 2x2 kernel matrices to be inverted."""


class InsufficientStatistics(NumericalError):
    pass
