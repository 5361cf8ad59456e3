"""Exception hierarchy shared by the whole package.

Grouped so the CLI can map failures onto its exit-code contract:
config problems exit 2, data problems exit 3, numerical failures exit 4.
"""

from __future__ import annotations


class LearnabilityError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(LearnabilityError):
    """Invalid experiment configuration or CLI arguments (exit code 2)."""


class DataError(LearnabilityError):
    """Invalid input data or a data regime an estimator cannot handle (exit code 3)."""


class NumericalError(LearnabilityError):
    """A numerical procedure failed to converge or produced garbage (exit code 4)."""


class InsufficientSamplesError(DataError):
    """Fewer samples than the estimator's minimum for the requested order."""


class ZeroVarianceError(DataError):
    """All labels equal; empirical variance is zero and cannot normalize."""


class UnderdeterminedError(DataError):
    """Least-squares residual estimator needs n > d; it is undefined otherwise."""


class NotPositiveDefiniteError(DataError):
    """Covariance estimate passed for whitening is not positive definite."""


class WrongLabelKindError(DataError):
    """Operation requires a different label kind (e.g. +/-1 labels)."""


class NumericalFailureError(NumericalError):
    """An internal solver (LP, eigensolver, ...) failed to produce a valid answer."""


class QuadratureFailureError(NumericalError):
    """Adaptive quadrature did not reach the requested agreement tolerance."""


class OracleGuardError(LearnabilityError):
    """A brute-force oracle was asked for an instance beyond its combinatorial guard."""


class CsvFormatError(DataError):
    """Malformed CSV input; subclasses carry position diagnostics."""


class CsvParseError(CsvFormatError):
    """Non-numeric cell. Carries 1-based row (including header) and column."""

    def __init__(self, message: str, row: int, col: int):
        super().__init__(f"{message} (row {row}, column {col})")
        self.row = row
        self.col = col


class MissingColumnError(CsvFormatError):
    """The requested label column does not appear in the header."""


class InconsistentWidthError(CsvFormatError):
    """A data row has a different number of cells than the header."""

    def __init__(self, message: str, row: int):
        super().__init__(f"{message} (row {row})")
        self.row = row
