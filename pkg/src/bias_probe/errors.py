"""Exception hierarchy.

Every error raised on bad input derives from :class:`DataError` so the CLI can
map it to exit code 3; configuration problems raise :class:`ConfigError`
(exit 2) and broken internal guarantees raise :class:`InvariantViolation`
(exit 4).
"""

from __future__ import annotations


class BiasProbeError(Exception):
    """Base class for all package errors."""


class ConfigError(BiasProbeError):
    pass


class InvariantViolation(BiasProbeError):
    """An internal guarantee did not hold; the message names the invariant."""


class DataError(BiasProbeError):
    pass


class DimensionMismatch(DataError):
    pass


class DimensionError(DataError):
    pass


class DegenerateRatings(DataError):
    pass


class MissingRatings(DataError):
    pass


class ZeroVariance(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class EmptyData(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class TooFewSamples(DataError):
    pass


class LengthMismatch(DataError):
    pass


class InvalidCounts(DataError):
    pass


class DegenerateCovariance(DataError):
    pass


class TooManySegments(DataError):
    pass


class SizeMismatch(DataError):
    pass


class MissingEmbedding(DataError):
    pass


class ScorerFailure(DataError):
    def __init__(self, message: str, sample_index: int | None = None):
        prefix = "" if sample_index is None else f"sample {sample_index}: "
        super().__init__(prefix + message)
        self.sample_index = sample_index


class SingleClassWarning(UserWarning):
    """Training labels contain one class; the fitted classifier is constant."""
