"""payguard: adversarially trained deepfake/fraud detection for payment images.

A generator/discriminator pair is trained from scratch on a procedurally
generated payment-card corpus; the trained discriminator then serves as the
fraud detector. See README.md for the CLI and the acceptance suite.
"""

from . import backend
from .errors import (ConfigError, DataError, DimensionError, DomainError,
                     NumericError, ParseError, PayguardError, StateError,
                     VersionError)
from .tensor import Tensor, ew_binary, matmul, reduce_mean, transpose

__version__ = "0.1.0"

__all__ = [
    "Tensor", "matmul", "ew_binary", "reduce_mean", "transpose",
    "backend", "PayguardError", "DimensionError", "DomainError",
    "StateError", "NumericError", "DataError", "ParseError",
    "ConfigError", "VersionError", "__version__",
]
