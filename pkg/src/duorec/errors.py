"""Exception types shared across the library."""


class DuorecError(Exception):
    """Base class for all duorec errors."""


class CorpusError(DuorecError):
    """Malformed corpus input: bad row, duplicate id, or too few documents."""


class LexiconError(DuorecError):
    """Lexicon construction failed: empty after filters, or missing language."""


class EmbeddingError(DuorecError):
    """Vector file parsing or registry consistency failure."""


class EmptyQueryError(DuorecError):
    """Query document has no indexed terms for the requested source."""

    def __init__(self, doc_id: str, source: str):
        self.doc_id = doc_id
        self.source = source
        super().__init__(
            f"document {doc_id!r} has no indexed terms for source {source!r}"
        )


class CacheLimitError(DuorecError):
    """More neighbors requested than the index caches; rebuild with larger K."""


class BundleError(DuorecError):
    """Bundle file is unreadable or internally inconsistent."""
