"""Exception hierarchy.

The CLI maps these onto exit codes: ``ConfigError`` -> 2,
``NumericalError`` and subclasses -> 3, ``CaptureFormatError``/``OSError`` -> 4.
"""


class QadaPoseError(Exception):
    """Base class for all package errors."""


class ConfigError(QadaPoseError, ValueError):
    """Bad or missing configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ContractError(QadaPoseError, ValueError):
    """Input violates a documented precondition (shape, symmetry, ...)."""


class NumericalError(QadaPoseError):
    """Numerical or geometric failure of an otherwise well-formed input."""


class DegeneracyError(NumericalError):
    pass


class PlanarityError(DegeneracyError):
    pass


class BehindCameraError(NumericalError):
    pass


class NearSingularError(NumericalError):
    pass


class OutOfFieldError(NumericalError):
    pass


class DetectionError(NumericalError):
    """Matched-filter peak missing, non-positive or not dominant enough."""


class IdentifiabilityError(NumericalError):
    pass


class CaptureFormatError(QadaPoseError, OSError):
    """Malformed capture or observation file."""
