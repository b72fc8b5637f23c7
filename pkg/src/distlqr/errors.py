"""Exception hierarchy.

Numerical failures and configuration failures are kept apart so the CLI can
map them to distinct exit codes.
"""


class DistLQRError(Exception):
    """Base class for every error raised by this package."""


class NumericalError(DistLQRError):
    """A well-formed input for which a computation cannot proceed."""


class DimensionMismatch(DistLQRError, ValueError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class CovarianceNotSPD(NotPositiveDefinite):
    pass


class NonStabilizing(NumericalError):
    pass


class EigensolveFailure(NumericalError):
    pass


class NotScalarSystem(DistLQRError, ValueError):
    pass


class BetaOutOfRange(NumericalError):
    pass


class SeriesNotConverged(NumericalError):
    pass


class SeriesUnavailable(DistLQRError):
    """Raised when a closed-form density is requested for non-Gaussian noise."""


class GridTooCoarse(NumericalError):
    pass


class InsufficientSamples(NumericalError):
    pass


class ConfigError(DistLQRError):
    """Config document failed schema or shape validation."""
