"""Exception types shared across the package."""


class DataError(ValueError):
    """Malformed input data: bad files, ragged rows, shape mismatches."""


class MaskGenerationError(DataError):
    """The requested missing rate cannot be achieved on this dataset."""


class NumericError(ArithmeticError):
    """Non-finite values or a failed numerical routine."""


class ConfigError(ValueError):
    """Invalid configuration, flags, or experiment spec."""
