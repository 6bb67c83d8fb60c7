"""Exception types shared across the package."""


class EprbError(Exception):
    """Base class for all package errors."""


class TtagFormatError(EprbError):
    """Malformed or incompatible time-tag file."""


class QuadratureError(EprbError):
    """Adaptive quadrature failed to converge within its refinement budget."""


class FitError(EprbError):
    """Window fit could not bracket or reach the requested target."""


class UsageError(EprbError):
    """Bad command line or configuration input."""
