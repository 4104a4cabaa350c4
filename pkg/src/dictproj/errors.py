"""Exception types shared across the package."""


class ParseError(ValueError):
    """Malformed input file; message carries the offending row or byte offset."""


class DimensionError(ValueError):
    """Matrix/vector shapes are inconsistent with each other."""


class ConfigurationError(ValueError):
    """A required setting is missing or settings contradict each other."""


class ParameterError(ValueError):
    """A scalar parameter is outside its valid range."""


class NumericError(RuntimeError):
    """A numeric routine produced non-finite values or failed to factorize."""
