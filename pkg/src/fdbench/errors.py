"""Exception hierarchy shared by all fdbench modules.

Two error families matter to callers: ``ValidationError`` (bad inputs,
broken invariants, protocol misuse; CLI exit code 1) and ``FormatError``
(unreadable or corrupt artifacts on disk; CLI exit code 2).
"""


class FdbenchError(Exception):
    """Base class for all errors raised by fdbench."""


class ValidationError(FdbenchError):
    """Input violates a documented invariant or precondition."""


class DimensionMismatchError(ValidationError):
    """Operands have incompatible dimensionality."""


class InsufficientSamplesError(ValidationError):
    """Too few samples for the requested estimator."""


class IndefiniteCovarianceError(ValidationError):
    """Covariance matrix has an eigenvalue below the tolerated floor."""


class ProtocolError(ValidationError):
    """Data roles or required fields do not match the evaluation protocol."""


class UndefinedCorrelationError(ValidationError):
    """Rank correlation is undefined (a sequence is entirely tied)."""


class IncompleteLadderError(ValidationError):
    """A ladder entry is missing a metric value needed by the analysis."""


class FormatError(FdbenchError):
    """File does not follow the expected on-disk format."""


class CorruptionError(FormatError):
    """File follows the format but its payload fails verification."""


class ParseError(FormatError):
    """A value in a text input could not be parsed."""
