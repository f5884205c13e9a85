"""Exception taxonomy shared across the pipeline."""


class AsgirError(Exception):
    """Base class for all errors raised by this package."""


class WavFormatError(AsgirError, ValueError):
    """Malformed RIFF/WAVE container; message names the offending chunk."""


class UnsupportedCodecError(AsgirError, ValueError):
    """WAV encoding we do not decode (only PCM16 and float32, mono/stereo)."""


class ArgumentError(AsgirError, ValueError):
    """Caller passed an invalid or mismatched argument."""


class ConfigError(AsgirError, ValueError):
    """Inconsistent or degenerate configuration values."""


class ShapeError(AsgirError, ValueError):
    """Input array shape incompatible with the requested operation."""


class ModelFileError(AsgirError, ValueError):
    """Base for weight/model container problems."""


class BadMagicError(ModelFileError):
    pass


class VersionMismatchError(ModelFileError):
    pass


class TruncatedFileError(ModelFileError):
    """File ends mid-record; message names the tensor being read."""


class ShapeInconsistencyError(ModelFileError):
    """A stored tensor disagrees with the declared configuration."""


class DegenerateTrainingError(AsgirError, ValueError):
    """Training set cannot support the requested model (e.g. one class)."""


class RegionError(AsgirError, ValueError):
    """Unknown region id or malformed region index data."""


class WikiError(AsgirError):
    """Base for retrieval failures."""


class PageNotFoundError(WikiError):
    """No page (or fixture) exists for the attempted title."""

    def __init__(self, title: str, message: str | None = None):
        super().__init__(message or f"no page found for title {title!r}")
        self.title = title


class TransportError(WikiError):
    """Network-level failure after exhausting retries."""


class StatusError(WikiError):
    """HTTP response with status >= 400."""

    def __init__(self, status_code: int, title: str):
        super().__init__(f"HTTP {status_code} fetching {title!r}")
        self.status_code = status_code
        self.title = title


class ParseError(WikiError, ValueError):
    """Page HTML yielded no usable content."""
