"""Exception taxonomy shared across the toolkit.

Each class maps onto one CLI exit code (see cli.EXIT_CODES); library code
raises these directly and never calls sys.exit.
"""


class PayguardError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(PayguardError):
    """Tensor/layer shapes do not line up for the requested operation."""


class DomainError(PayguardError):
    """Input values outside an operation's domain (empty tensor, bad range)."""


class StateError(PayguardError):
    """Object used out of protocol (stale gradient tape, double backward)."""


class NumericError(PayguardError):
    """Non-finite value where the contract demands finite arithmetic."""


class DataError(PayguardError):
    """Corpus, split, or file-content problems."""


class ParseError(DataError):
    """Malformed on-disk format (PGM, manifest, checkpoint payload)."""


class ConfigError(PayguardError):
    """Invalid or unknown run-configuration fields."""


class VersionError(PayguardError):
    """Checkpoint format version does not match this build."""
