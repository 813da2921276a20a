"""
Exception hierarchy for the hq toolkit.

Library code raises these; the CLI maps the input-related ones to usage
errors (exit code 2).
"""


class HQError(Exception):
    """Base class for every error raised by the toolkit."""


class DimensionError(HQError, ValueError):
    """Quaternion tuples or control vectors of incompatible length."""


class DomainError(HQError, ValueError):
    """Argument outside the domain of an operation (rho <= 0, alpha <= 0, 0/0)."""


class UnsupportedFamilyError(HQError):
    """Operation requires a dilation-homogeneous quasi-norm family."""


class ParseError(HQError, ValueError):
    """Malformed point, quaternion or norm-family literal."""


class ConfigError(HQError):
    """Invalid configuration value."""


class SchemaError(HQError):
    """Records passed to a table emitter do not share one schema."""


class UnknownFieldError(HQError, KeyError):
    """Unknown left-invariant vector field name."""
