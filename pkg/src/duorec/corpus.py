"""Corpus ingestion: raw documents in, language-tagged term-id sets out.

The pipeline is load_corpus -> tokenize -> build_lexicon -> encode_documents.
Every term is tagged with its language ("en:school", "fr:école") so that a
multilingual corpus shares a single vocabulary space without collisions.
All objects produced here are immutable once built and safe to read
concurrently.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator

import numpy as np

from .errors import CorpusError, LexiconError

LANG_SEP = ":"

# Lowercased text is segmented on unicode word boundaries, so punctuation and
# symbols never survive. Whitespace chunks starting with "#" or "http" are
# dropped wholesale before segmentation (hashtags and links).
_WORD_RE = re.compile(r"\w+")
_DROP_PREFIXES = ("#", "http")

_DOC_FIELDS = ("id", "text", "lang", "image_url")


@dataclass(frozen=True)
class Document:
    """One corpus item: raw text plus routing metadata."""

    id: str
    text: str
    lang: str
    image_url: str | None = None
    meta: dict[str, str] | None = None


class Corpus:
    """Ordered, immutable collection of documents with unique ids."""

    def __init__(self, documents: list[Document]):
        if len(documents) < 2:
            raise CorpusError(
                f"corpus needs at least 2 documents, got {len(documents)}"
            )
        self._documents = tuple(documents)
        self._position = {d.id: i for i, d in enumerate(self._documents)}
        if len(self._position) != len(self._documents):
            seen: set[str] = set()
            for d in self._documents:
                if d.id in seen:
                    raise CorpusError(f"duplicate document id {d.id!r}")
                seen.add(d.id)

    @property
    def n(self) -> int:
        return len(self._documents)

    @property
    def documents(self) -> tuple[Document, ...]:
        return self._documents

    def __len__(self) -> int:
        return len(self._documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self._documents)

    def __getitem__(self, position: int) -> Document:
        return self._documents[position]

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._position

    def position(self, doc_id: str) -> int:
        """Input-order index of a document; raises KeyError when unknown."""
        return self._position[doc_id]

    def get(self, doc_id: str) -> Document | None:
        pos = self._position.get(doc_id)
        return None if pos is None else self._documents[pos]

    @property
    def languages(self) -> list[str]:
        return sorted({d.lang for d in self._documents})

    def content_hash(self) -> str:
        """Order-sensitive sha256 over ids, texts and languages."""
        h = hashlib.sha256()
        for d in self._documents:
            h.update(json.dumps([d.id, d.text, d.lang], ensure_ascii=False).encode())
        return h.hexdigest()


def tokenize(text: str, lang: str, lemma_table: dict[str, str] | None = None) -> list[str]:
    """Split text into lowercased, language-tagged word forms.

    Whitespace chunks starting with "#" or "http" are dropped, the rest is
    segmented on unicode word boundaries and lowercased. Surviving tokens are
    replaced by ``lemma_table[token]`` when present, then tagged "lang:token".
    Empty text yields an empty list.
    """
    tokens: list[str] = []
    for chunk in text.split():
        low = chunk.lower()
        if low.startswith(_DROP_PREFIXES):
            continue
        for word in _WORD_RE.findall(low):
            if lemma_table:
                word = lemma_table.get(word, word)
            tokens.append(f"{lang}{LANG_SEP}{word}")
    return tokens


def load_lemma_table(source: str | Path | IO[str]) -> dict[str, str]:
    """Read a "surface<TAB>lemma" table; both sides are lowercased."""
    close = False
    if isinstance(source, (str, Path)):
        handle: IO[str] = open(source, encoding="utf-8")
        close = True
    else:
        handle = source
    table: dict[str, str] = {}
    try:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise CorpusError(f"lemma table line {lineno}: expected 'surface<TAB>lemma'")
            surface, lemma = parts[0].lower(), parts[1].lower()
            if any(c.isspace() for c in lemma) or LANG_SEP in lemma:
                raise CorpusError(
                    f"lemma table line {lineno}: lemma {lemma!r} may not contain "
                    f"whitespace or {LANG_SEP!r}"
                )
            table[surface] = lemma
    finally:
        if close:
            handle.close()
    return table


def _as_text_stream(source: str | Path | IO) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, encoding="utf-8", newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    # byte stream
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def _clean_meta(row: dict, rownum: int, kind: str) -> dict[str, str] | None:
    meta: dict[str, str] = {}
    for key, value in row.items():
        if value is None or value == "":
            continue
        if isinstance(value, (dict, list)):
            raise CorpusError(f"{kind} row {rownum}: meta field {key!r} must be flat")
        meta[str(key)] = str(value)
    return meta or None


def _load_csv(stream: IO[str], default_lang: str) -> list[Document]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise CorpusError("empty corpus: no header row")
    if "text" not in reader.fieldnames:
        raise CorpusError("csv corpus needs a 'text' column")
    has_id = "id" in reader.fieldnames
    docs: list[Document] = []
    for rownum, row in enumerate(reader, start=1):
        if None in row:  # more cells than header columns
            raise CorpusError(f"csv row {rownum}: more fields than header columns")
        text = row.get("text")
        if text is None:
            raise CorpusError(f"csv row {rownum}: missing 'text' field")
        if has_id:
            doc_id = (row.get("id") or "").strip()
            if not doc_id:
                raise CorpusError(f"csv row {rownum}: empty id")
        else:
            doc_id = str(rownum - 1)
        lang = (row.get("lang") or "").strip().lower() or default_lang
        image_url = (row.get("image_url") or "").strip() or None
        extra = {k: v for k, v in row.items() if k not in _DOC_FIELDS}
        docs.append(
            Document(
                id=doc_id,
                text=text,
                lang=lang,
                image_url=image_url,
                meta=_clean_meta(extra, rownum, "csv"),
            )
        )
    return docs


def _load_jsonl(stream: IO[str], default_lang: str) -> list[Document]:
    docs: list[Document] = []
    row_index = 0
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"jsonl line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(row, dict):
            raise CorpusError(f"jsonl line {lineno}: expected an object")
        text = row.get("text")
        if not isinstance(text, str):
            raise CorpusError(f"jsonl line {lineno}: missing or non-string 'text'")
        doc_id = row.get("id")
        doc_id = str(doc_id) if doc_id is not None else str(row_index)
        lang = str(row.get("lang") or "").strip().lower() or default_lang
        image_url = row.get("image_url") or None
        meta_in = row.get("meta") or {}
        if not isinstance(meta_in, dict):
            raise CorpusError(f"jsonl line {lineno}: 'meta' must be an object")
        extra = {k: v for k, v in row.items() if k not in (*_DOC_FIELDS, "meta")}
        extra.update(meta_in)
        docs.append(
            Document(
                id=doc_id,
                text=text,
                lang=lang,
                image_url=str(image_url) if image_url else None,
                meta=_clean_meta(extra, lineno, "jsonl"),
            )
        )
        row_index += 1
    return docs


def load_corpus(
    source: str | Path | IO,
    format: str = "csv",
    default_lang: str = "en",
) -> Corpus:
    """Parse a CSV or JSONL document stream into a Corpus.

    The CSV header (or JSONL keys) may include id, text, lang and image_url;
    any other columns land in ``meta``. Missing ids are auto-assigned from the
    0-based row index, missing languages fall back to ``default_lang``.
    """
    if format not in ("csv", "jsonl"):
        raise CorpusError(f"unknown corpus format {format!r} (use 'csv' or 'jsonl')")
    stream, close = _as_text_stream(source)
    try:
        docs = _load_csv(stream, default_lang) if format == "csv" else _load_jsonl(stream, default_lang)
    finally:
        if close:
            stream.close()
    if not docs:
        raise CorpusError("empty corpus")
    seen: set[str] = set()
    for d in docs:
        if d.id in seen:
            raise CorpusError(f"duplicate document id {d.id!r}")
        seen.add(d.id)
    return Corpus(docs)


class Lexicon:
    """Sorted language-tagged vocabulary with per-term document frequencies."""

    def __init__(self, terms: list[str], df: np.ndarray):
        self.terms: list[str] = list(terms)
        self.df = np.asarray(df, dtype=np.int64)
        if self.df.shape != (len(self.terms),):
            raise LexiconError("df must align with terms")
        self.term_to_id: dict[str, int] = {t: i for i, t in enumerate(self.terms)}
        if len(self.term_to_id) != len(self.terms):
            raise LexiconError("lexicon terms must be unique")

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_id

    def id_for(self, term: str) -> int | None:
        return self.term_to_id.get(term)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for t in self.terms:
            h.update(t.encode())
            h.update(b"\x00")
        return h.hexdigest()

    @property
    def languages(self) -> list[str]:
        return sorted({t.split(LANG_SEP, 1)[0] for t in self.terms})


def build_lexicon(
    corpus: Corpus,
    registry,
    min_df: int = 2,
    max_df_ratio: float = 1.0,
    lemma_tables: dict[str, dict[str, str]] | None = None,
) -> Lexicon:
    """Intersect the corpus vocabulary with the embedding vocabulary.

    A term survives when it occurs in at least ``min_df`` documents, in at
    most ``max_df_ratio * n`` documents, and its word has a vector for its
    language. Terms are ordered lexicographically so the lexicon is
    deterministic for a given corpus and registry.
    """
    if min_df < 1:
        raise LexiconError(f"min_df must be >= 1, got {min_df}")
    if not 0 < max_df_ratio <= 1:
        raise LexiconError(f"max_df_ratio must be in (0, 1], got {max_df_ratio}")
    missing = sorted(set(corpus.languages) - set(registry.languages))
    if missing:
        raise LexiconError(
            "no embeddings loaded for language(s): " + ", ".join(missing)
        )
    tables = lemma_tables or {}
    df_counter: Counter[str] = Counter()
    for doc in corpus:
        df_counter.update(set(tokenize(doc.text, doc.lang, tables.get(doc.lang))))
    n = corpus.n
    kept: list[str] = []
    for term, df in df_counter.items():
        if df < min_df or df > max_df_ratio * n:
            continue
        lang, _, word = term.partition(LANG_SEP)
        if registry.has(lang, word):
            kept.append(term)
    if not kept:
        raise LexiconError(
            "empty lexicon: relax min_df/max_df_ratio or check that the "
            "embedding files cover the corpus vocabulary"
        )
    kept.sort()
    return Lexicon(kept, np.array([df_counter[t] for t in kept], dtype=np.int64))


@dataclass(frozen=True)
class EncodedDocument:
    """A document reduced to its sorted, duplicate-free lexicon term ids."""

    doc_id: str
    term_ids: np.ndarray

    @property
    def empty(self) -> bool:
        return self.term_ids.size == 0


def encode_documents(
    corpus: Corpus,
    lexicon: Lexicon,
    lemma_tables: dict[str, dict[str, str]] | None = None,
) -> list[EncodedDocument]:
    """Encode each document as the set of lexicon ids present in it.

    Duplicate occurrences collapse (presence is binary). Documents whose
    tokens all fall outside the lexicon are kept with an empty id set. Must
    be called with the same lemma tables used for build_lexicon.
    """
    tables = lemma_tables or {}
    lookup = lexicon.term_to_id
    encoded: list[EncodedDocument] = []
    for doc in corpus:
        ids = {
            lookup[t]
            for t in tokenize(doc.text, doc.lang, tables.get(doc.lang))
            if t in lookup
        }
        encoded.append(
            EncodedDocument(doc.id, np.array(sorted(ids), dtype=np.int64))
        )
    return encoded
