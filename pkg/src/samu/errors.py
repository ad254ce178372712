class SamuError(Exception):
    """Base class for errors raised by the engine and its file formats."""


class ParseError(SamuError, ValueError):
    """A text file did not match its expected format.

    ``path`` and ``lineno`` locate the offending line when known.
    """

    def __init__(self, message: str, path=None, lineno: int | None = None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class LoadError(SamuError, OSError):
    """A required input file is missing or unreadable."""
