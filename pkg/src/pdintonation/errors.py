"""Exception types raised across the package."""


class WavFormatError(ValueError):
    """The WAV file is not 16-bit PCM."""


class EmptyAudioError(ValueError):
    """The audio file holds no sample frames."""


class UnvoicedContourError(ValueError):
    """The contour has no (or too few) voiced frames."""


class DegenerateContourError(ValueError):
    """The voiced part of the contour is constant (zero variance)."""


class EmptyBandError(ValueError):
    """No spectral bins fall inside the requested band."""


class DegenerateDataError(ValueError):
    """Statistical input without the variability the estimator needs."""


class CohortFormatError(ValueError):
    """Malformed cohort metadata, correction overlay or parameter file."""
