"""Exception hierarchy and the CLI exit codes attached to it."""


class NHQError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 1


class UsageError(NHQError, ValueError):
    """Invalid parameters or mismatched dimensions supplied by the caller."""

    exit_code = 2


class ConfigurationError(NHQError):
    """Inputs that do not fit together (alignment, flavor, method)."""

    exit_code = 2


class DataFormatError(NHQError):
    """Malformed input file."""

    exit_code = 3

    def __init__(self, message: str, offset: int | None = None) -> None:
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class ArchiveError(DataFormatError):
    """Index archive could not be loaded."""


class BadMagicError(ArchiveError):
    """File does not start with the archive magic."""


class VersionMismatchError(ArchiveError):
    """Archive was written by an unsupported format version."""


class ChecksumMismatchError(ArchiveError):
    """Archive payload does not match its stored checksum."""


class InvariantViolation(NHQError):
    """A structural invariant of a graph or report does not hold."""

    exit_code = 4
