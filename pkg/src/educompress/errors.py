"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: UsageError and bad input
exit 2, backend/pipeline failures exit 3.
"""

from __future__ import annotations


class EducompressError(Exception):
    """Base class for all package errors."""


class UsageError(EducompressError):
    """Invalid configuration, arguments, or input files."""


class SpanRangeError(EducompressError):
    """An EDU id interval reaches outside the sequence it is bound to."""

    def __init__(self, id_start: int, id_end: int, n_edus: int):
        self.id_start = id_start
        self.id_end = id_end
        self.n_edus = n_edus
        super().__init__(
            f"span [{id_start}, {id_end}] out of range for sequence of {n_edus} units"
        )


class BackendError(EducompressError):
    """Base class for remote-inference failures."""


class TransportError(BackendError):
    """Connection, timeout, auth, or HTTP-status failure (retries exhausted)."""


class ProtocolError(BackendError):
    """The remote endpoint answered, but not in the expected wire format."""


class DecompositionError(BackendError):
    """A remote decomposition reply failed strict structure parsing."""

    def __init__(self, message: str, diagnostics=None):
        self.diagnostics = list(diagnostics or [])
        super().__init__(message)


class StageError(EducompressError):
    """Failure inside a named pipeline stage; wraps the original cause."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
