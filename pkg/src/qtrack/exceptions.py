class QTrackError(Exception):
    """Base class for all errors raised by qtrack."""


class DensityUndefinedError(QTrackError, ValueError):
    """Raised when a density is requested for a point-mass law."""


class BusyPeriodTooLargeError(QTrackError):
    """Raised when a busy period exceeds the configured combinatorial cap."""

    def __init__(self, size, cap):
        super().__init__(f"busy period of size {size} exceeds cap {cap}")
        self.size = size
        self.cap = cap


class DimensionMismatchError(QTrackError, ValueError):
    pass


class MissingAccuraciesError(QTrackError, ValueError):
    pass


class ConfigError(QTrackError, ValueError):
    """Invalid experiment configuration; ``location`` points at the offending entry."""

    def __init__(self, message, location=None):
        super().__init__(f"{location}: {message}" if location else message)
        self.message = message
        self.location = location


class InstabilityWarning(UserWarning):
    pass
