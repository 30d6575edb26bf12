"""Exception types shared across the package."""


class Gbdt2RtlError(Exception):
    """Base class for all errors raised by this package."""


class ModelParseError(Gbdt2RtlError):
    """A model document could not be parsed at all."""


class ValidationError(Gbdt2RtlError):
    """Parsed input violates a structural or semantic requirement."""


class ConfigError(Gbdt2RtlError):
    """A width, pipeline, or emission option is out of its legal range."""


class DataError(Gbdt2RtlError):
    """A dataset or vector file is missing, malformed, or inconsistent."""


class ContractViolation(Gbdt2RtlError):
    """Caller handed a value that violates a documented precondition."""
