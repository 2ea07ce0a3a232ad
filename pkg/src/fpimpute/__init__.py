"""Tabular missing-value imputation: fixed-point generative model plus baselines."""

from .errors import ConfigError, DataError, MaskGenerationError, NumericError

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "MaskGenerationError",
    "NumericError",
    "__version__",
]
