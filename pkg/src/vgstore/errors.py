"""Exception hierarchy shared across the package.

Everything raised on purpose derives from VgError so callers (and the CLI)
can map failures to exit codes without matching on message text.
"""

from __future__ import annotations


class VgError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(VgError):
    """Malformed input: bad term, bad delta, bad parameter."""


class NotFoundError(VgError):
    """Lookup of an id, version, branch, or commit that does not exist."""


class StateError(VgError):
    """Operation illegal in the current state (double init, held lock, ...)."""


class DeltaError(VgError):
    """A delta fails strict validation against its parent versions."""


class RepositoryError(VgError):
    """An on-disk repository is missing pieces or internally inconsistent."""


class BenchError(VgError):
    """A benchmark run produced inconsistent results."""


class QueryError(VgError):
    """Query rejected, either at parse time or during validation.

    Parse errors carry the 1-based line and column of the offending token.
    """

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
