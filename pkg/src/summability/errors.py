"""Shared exception types.

The CLI maps these onto exit codes: any :class:`SummabilityError` is a data
problem (exit 1), while usage and I/O failures exit 2.
"""


class SummabilityError(Exception):
    """Base class for all toolkit errors."""


class DataFormatError(SummabilityError):
    """A record or file violates the expected format or a corpus invariant."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingDocumentError(SummabilityError):
    """An operation referenced a document absent from its input table."""


class DegenerateInputError(SummabilityError):
    """The input admits no defined answer (zero variance, all ties, ...)."""


class SchemaMismatchError(SummabilityError):
    """A model or feature file declares a schema this build cannot honor."""


class InfeasibleTransformError(SummabilityError):
    """A document is too short (or lacks a reference) for the transform."""
