"""Exception hierarchy for the hcube pipeline.

The CLI maps these onto exit codes: ``UsageError`` -> 1, ``DataError`` and
subclasses -> 2, ``NumericError`` and subclasses -> 3.
"""


class HcubeError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(HcubeError):
    """Invalid combination of arguments or options."""


class DataError(HcubeError):
    """Malformed, inconsistent, or out-of-contract input data."""


class DimensionMismatch(DataError):
    """A matrix or vector has an unexpected dimension."""


class LengthMismatch(DataError):
    """Two per-item arrays disagree on item count."""


class NonFiniteEntry(DataError):
    """A NaN or infinity was found where finite values are required."""


class InvalidValue(DataError):
    """A scalar field violates its invariant (range, sign, alignment)."""


class MissingTextForLabel(DataError):
    """An observation label has no text embedding to pair with."""


class BitsNotWordAligned(DataError):
    """Code length is not a multiple of the 64-bit packing word."""


class BitsMismatch(DataError):
    """Query and index disagree on code length."""


class ShapeMismatch(DataError):
    """Two batches disagree on shape."""


class FileFormatError(DataError):
    """Base class for binary file parsing failures; names a byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class BadMagic(FileFormatError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersion(FileFormatError):
    """File declares a format version this reader does not understand."""


class TruncatedPayload(FileFormatError):
    """File ended before the declared payload was complete."""


class NumericError(HcubeError):
    """Numerical failure during optimization or factorization."""


class FactorizationFailure(NumericError):
    """A positive-definite factorization failed; indicates a bug upstream."""


class NonFiniteLoss(NumericError):
    """Training produced a NaN or infinite loss value."""
