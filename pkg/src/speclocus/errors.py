"""Exception and warning types shared across the package."""


class SpecLocusError(Exception):
    """Base class for all speclocus errors."""


class InvalidArgumentError(SpecLocusError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateSensorError(SpecLocusError):
    """A sensor channel integrates to zero strength."""


class CoverageError(SpecLocusError):
    """A spectral curve does not cover the wavelength range it is used on."""


class DegenerateDataError(SpecLocusError):
    """Input data carries no usable signal (coincident points, rank-0 covariance, ...)."""


class SingularSystemError(SpecLocusError):
    """A solve has no unique solution (e.g. two calibration lights at equal temperature)."""


class InsufficientDataError(SpecLocusError):
    """Too few valid pixels or observations to run an estimator."""


class ImageFormatError(SpecLocusError, ValueError):
    """An image file could not be parsed; the message carries a byte offset or line number."""


class IllConditionedWarning(UserWarning):
    """Eigen-structure too isotropic; a recovered direction is unreliable."""


class InconsistentDataWarning(UserWarning):
    """Observations disagree with the model beyond the documented tolerance."""
