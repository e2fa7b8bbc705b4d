"""
Exception hierarchy for the ESP index.

Every error the library raises derives from EspError, so callers (the CLI
in particular) can map whole families to exit codes without catching
unrelated bugs. Each family also subclasses the matching builtin so plain
`except ValueError` / `except IndexError` code keeps working.
"""


class EspError(Exception):
    """Base class for every error raised by this package."""


class InvariantViolation(EspError, ValueError):
    """Input broke a structural precondition: a decreasing sequence fed to
    the monotone encoder, adjacent equal symbols fed to alphabet reduction,
    or a grammar whose rules do not fit the round-partitioned id space."""


class OutOfRange(EspError, IndexError):
    """A position passed to rank/access lies outside the structure."""


class NotFound(EspError, LookupError):
    """select asked for an occurrence beyond the symbol's multiplicity."""


class DomainError(EspError, ValueError):
    """A terminal (or an id outside the index) was passed where a variable
    is required, e.g. left_child of a terminal."""


class InputError(EspError, ValueError):
    """The text cannot be indexed: fewer than two symbols have no ESP tree."""


class QueryError(EspError, ValueError):
    """A search request is malformed (negative threshold, bad length)."""


class QueryTooShort(QueryError):
    """|Q| < 2. A single character has no ESP tree; a terminal scan answers
    that case and is deliberately not offered."""


class QueryTooLong(QueryError):
    """|Q| exceeds the indexed text, so no |Q|-gram exists."""


class IndexFormatError(EspError):
    """The byte stream is not a readable index file."""


class BadMagic(IndexFormatError):
    """The file does not start with the index magic/version tag."""


class Truncated(IndexFormatError):
    """The stream ended before a declared section was complete."""


class ChecksumMismatch(IndexFormatError):
    """The trailing CRC-32 does not match the preceding bytes."""
