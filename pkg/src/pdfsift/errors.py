"""Exception hierarchy with stable, machine-readable error codes.

Every error the library raises deliberately carries a ``code`` string that
stays fixed across releases; the CLI prints these codes so callers can match
on them instead of on message text.
"""

from __future__ import annotations


class PdfSiftError(Exception):
    """Base class for all library errors."""

    code = "ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class InsufficientSamplesError(PdfSiftError):
    code = "INSUFFICIENT_SAMPLES"


class SchemaMismatchError(PdfSiftError):
    code = "SCHEMA_MISMATCH"


class InvalidFractionError(PdfSiftError):
    code = "INVALID_FRACTION"


class NonFiniteInputError(PdfSiftError):
    code = "NON_FINITE_INPUT"


class InvalidComponentCountError(PdfSiftError):
    code = "INVALID_COMPONENT_COUNT"


class SingleClassError(PdfSiftError):
    code = "SINGLE_CLASS"


class InvalidConfigError(PdfSiftError):
    code = "INVALID_CONFIG"


class BatchTooSmallError(PdfSiftError):
    code = "BATCH_TOO_SMALL"


class NumericDivergenceError(PdfSiftError):
    """Raised when a parameter or gradient stops being finite during training.

    ``history`` carries the records of the epochs completed before the abort.
    """

    code = "NUMERIC_DIVERGENCE"

    def __init__(self, message: str = "", history=None):
        super().__init__(message)
        self.history = history


# Reason codes carried by ModelInvalidError.
BAD_MAGIC = "BAD_MAGIC"
SHAPE_MISMATCH = "SHAPE_MISMATCH"
NON_FINITE = "NON_FINITE"
ORTHO_FAIL = "ORTHO_FAIL"
VERSION_UNSUPPORTED = "VERSION_UNSUPPORTED"


class ModelInvalidError(PdfSiftError):
    """A model bundle failed validation; ``reason`` says why."""

    code = "MODEL_INVALID"

    def __init__(self, reason: str, message: str = ""):
        super().__init__(message or f"{self.code}: {reason}")
        self.reason = reason
