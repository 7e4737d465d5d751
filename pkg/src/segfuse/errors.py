"""Exception hierarchy shared across the toolkit."""


class SegfuseError(Exception):
    """Base class for all toolkit errors."""


class FormatError(SegfuseError):
    """File is not a well-formed NPY v1.0 stream (bad magic, header, or size)."""


class SchemaError(SegfuseError):
    """Array exists but its dtype/rank/shape does not match the requested role."""


class ValidationError(SegfuseError):
    """Array violates a domain invariant (range, probability sum, label range)."""
