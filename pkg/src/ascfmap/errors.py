"""Exception hierarchy shared by every codec layer."""


class AscError(Exception):
    """Base class for all codec errors."""


class InvalidArgument(AscError, ValueError):
    pass


class ModeViolation(AscError, ValueError):
    """One-endpoint mode was asked to encode negative samples."""


class Unsupported(AscError):
    pass


class CorruptStream(AscError):
    """A serialized stream or file cannot be parsed."""


class BadMagic(CorruptStream):
    pass


class BadVersion(CorruptStream):
    pass


class Truncated(CorruptStream):
    pass


class TrailingData(CorruptStream):
    pass


class InvalidSample(CorruptStream):
    """NaN or infinity found in an FP16 payload."""
