"""Exception hierarchy shared by all pipeline stages."""


class QpcmError(Exception):
    """Base class for all package errors; carries a machine-readable category."""

    category = "error"


class ConfigError(QpcmError):
    """A configuration value violates an invariant, or an unknown key was given."""

    category = "config"


class StreamOrderError(QpcmError):
    """An event stream that must be time-sorted is not."""

    category = "stream_order"


class ShapeError(QpcmError):
    """Two frames or grids that must share geometry do not."""

    category = "shape"


class AnalysisError(QpcmError):
    """A metric could not be computed from the data (e.g. too few peaks)."""

    category = "analysis"

    def __init__(self, message, profile=None):
        super().__init__(message)
        self.profile = profile


class StoreError(QpcmError):
    """Base class for event-file problems."""

    category = "store"


class BadMagicError(StoreError):
    category = "store_bad_magic"


class VersionError(StoreError):
    category = "store_version"


class TruncatedFileError(StoreError):
    """File ends mid-record; message names the byte offset."""

    category = "store_truncated"
