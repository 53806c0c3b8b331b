"""Exception types shared across the pipeline."""


class LiarwalkError(Exception):
    """Base class for all package errors."""


class DataFormatError(LiarwalkError):
    """Malformed or out-of-domain input data (files, records, annotations)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateSequenceError(LiarwalkError):
    """A pose sequence that cannot be normalized (all joints coincident)."""


class NumericError(LiarwalkError):
    """Runtime numeric failure (divergence, shape mismatch in the engine)."""
