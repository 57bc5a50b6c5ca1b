"""Exception types shared across the package."""


class ReplimitError(Exception):
    """Base class for all errors raised by this package."""


class WordNetFormatError(ReplimitError):
    """A WordNet database file is missing or malformed."""

    def __init__(self, path, byte_offset: int, reason: str):
        self.path = str(path)
        self.byte_offset = int(byte_offset)
        self.reason = reason
        super().__init__(f"{self.path}: byte {self.byte_offset}: {reason}")


class LexiconFormatError(ReplimitError):
    """A lexicon TSV file is malformed."""

    def __init__(self, path, line: int, reason: str):
        self.path = str(path)
        self.line = int(line)
        self.reason = reason
        super().__init__(f"{self.path}: line {self.line}: {reason}")


class DegenerateLexiconError(ReplimitError):
    """The lexicon cannot supply positive global normalizers."""


class CorpusFormatError(ReplimitError):
    """A caption corpus JSONL record is malformed."""

    def __init__(self, line: int, reason: str, path=None):
        self.path = str(path) if path is not None else None
        self.line = int(line)
        self.reason = reason
        where = f"{self.path}: " if self.path else ""
        super().__init__(f"{where}line {self.line}: {reason}")


class EmptyCaptionError(ReplimitError):
    """An operation that needs at least one countable word got none."""


class TransportError(ReplimitError):
    """The chat-completion endpoint could not be reached."""


class ProviderError(ReplimitError):
    """The chat-completion endpoint replied with an unusable payload."""


class FeatureFormatError(ReplimitError):
    """A feature binary file is malformed."""


class TensorFormatError(ReplimitError):
    """A tensor binary file is malformed."""
