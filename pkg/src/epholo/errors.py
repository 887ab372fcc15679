"""Exception hierarchy shared by every module of the toolkit."""


class EPHoloError(Exception):
    """Base class for all toolkit errors."""


class NearDefective(EPHoloError):
    """Eigenvectors requested too close to an exceptional point."""


class NoConvergence(EPHoloError):
    """Newton refinement exhausted its iteration budget."""


class EscapedRegion(EPHoloError):
    """Newton iterate left the inflated search region."""


class AmbiguousMatching(EPHoloError):
    """Branch continuation could not find an unambiguous step."""

    def __init__(self, message, scanline=None):
        super().__init__(message)
        self.scanline = scanline


class LoopTooCloseToEP(EPHoloError):
    """A parameter loop passes within the exclusion radius of an EP."""


class IndexOutOfRange(EPHoloError, IndexError):
    pass


class DimensionMismatch(EPHoloError, ValueError):
    pass


class ConfigError(EPHoloError, ValueError):
    """Bad family descriptor, loop descriptor or run configuration.

    ``key`` names the offending configuration entry when known.
    """

    def __init__(self, message, key=None):
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key
