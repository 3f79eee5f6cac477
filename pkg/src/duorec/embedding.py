"""Aligned word vectors and the per-term nearest-neighbor function.

Vector files use the common text layout: a "count dim" header line followed
by one "word v1 ... vp" row per term. Languages share one registry and must
agree on the dimension p; cross-language distances are meaningful only when
the per-language spaces were aligned upstream (alignment is an input
assumption, not something this module performs).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .corpus import LANG_SEP, Lexicon
from .errors import EmbeddingError

MODE_REPLACEMENT = "replacement"
MODE_EXPANSION = "expansion"
MODES = (MODE_REPLACEMENT, MODE_EXPANSION)

METRIC_EUCLIDEAN = "euclidean"
METRIC_COSINE = "cosine"
METRICS = (METRIC_EUCLIDEAN, METRIC_COSINE)

_KNN_BLOCK = 256
# Candidates are preselected with the expanded |q|^2 - 2qv + |v|^2 form and
# then re-ranked on exact elementwise distances; the pad absorbs any boundary
# reshuffling caused by rounding in the fast form.
_KNN_PAD = 8


def load_embeddings(
    source: str | Path | IO,
    lang: str = "",
    restrict_to: set[str] | None = None,
) -> tuple[int, dict[str, np.ndarray]]:
    """Parse a text vector file into (dim, word -> float64 vector).

    When ``restrict_to`` is given only those words are retained, which keeps
    memory bounded for large distribution files. Malformed rows raise
    EmbeddingError naming the offending line.
    """
    label = f"embeddings[{lang}]" if lang else "embeddings"
    close = False
    if isinstance(source, (str, Path)):
        handle: IO[str] = open(source, encoding="utf-8")
        close = True
    elif hasattr(source, "read") and isinstance(source.read(0), bytes):
        import io

        handle = io.TextIOWrapper(source, encoding="utf-8")
    else:
        handle = source
    try:
        header = handle.readline()
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingError(f"{label}: line 1: expected 'count dim' header")
        try:
            _count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise EmbeddingError(f"{label}: line 1: expected 'count dim' header") from None
        if dim < 1:
            raise EmbeddingError(f"{label}: line 1: dimension must be >= 1")
        table: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split(" ")
            # trailing space before newline is common in the wild
            if fields and fields[-1] == "":
                fields.pop()
            if len(fields) != dim + 1:
                raise EmbeddingError(
                    f"{label}: line {lineno}: expected {dim} values, got {len(fields) - 1}"
                )
            word = fields[0]
            if restrict_to is not None and word not in restrict_to:
                continue
            try:
                vec = np.array(fields[1:], dtype=np.float64)
            except ValueError:
                raise EmbeddingError(f"{label}: line {lineno}: non-numeric value") from None
            if not np.all(np.isfinite(vec)):
                raise EmbeddingError(f"{label}: line {lineno}: NaN or Inf component")
            table[word] = vec
        return dim, table
    finally:
        if close:
            handle.close()


class EmbeddingRegistry:
    """Per-language word -> vector tables sharing one dimension p."""

    def __init__(self) -> None:
        self._tables: dict[str, dict[str, np.ndarray]] = {}
        self.dim: int | None = None
        self.source_hashes: dict[str, str] = {}

    @property
    def languages(self) -> list[str]:
        return sorted(self._tables)

    def add(self, lang: str, table: dict[str, np.ndarray], dim: int | None = None) -> None:
        """Register a language table, validating dimensions and finiteness."""
        vecs = {w: np.asarray(v, dtype=np.float64) for w, v in table.items()}
        dims = {v.shape for v in vecs.values()}
        if len(dims) > 1:
            raise EmbeddingError(f"embeddings[{lang}]: inconsistent vector dimensions")
        if dims:
            (shape,) = dims
            if len(shape) != 1:
                raise EmbeddingError(f"embeddings[{lang}]: vectors must be 1-d")
            dim = shape[0] if dim is None else dim
            if shape[0] != dim:
                raise EmbeddingError(f"embeddings[{lang}]: vectors do not match dim {dim}")
        if dim is None:
            raise EmbeddingError(f"embeddings[{lang}]: empty table with unknown dimension")
        if self.dim is not None and dim != self.dim:
            raise EmbeddingError(
                f"embeddings[{lang}]: dimension {dim} conflicts with registry dimension {self.dim}"
            )
        for w, v in vecs.items():
            if not np.all(np.isfinite(v)):
                raise EmbeddingError(f"embeddings[{lang}]: NaN or Inf vector for {w!r}")
        self.dim = dim
        self._tables[lang] = vecs

    def load(
        self,
        lang: str,
        source: str | Path | IO,
        restrict_to: set[str] | None = None,
    ) -> None:
        dim, table = load_embeddings(source, lang, restrict_to)
        if isinstance(source, (str, Path)):
            import hashlib

            self.source_hashes[lang] = hashlib.sha256(Path(source).read_bytes()).hexdigest()
        self.add(lang, table, dim)

    @classmethod
    def from_dict(cls, tables: dict[str, dict[str, Iterable[float]]]) -> "EmbeddingRegistry":
        reg = cls()
        for lang, table in tables.items():
            reg.add(lang, {w: np.asarray(v, dtype=np.float64) for w, v in table.items()})
        return reg

    def has(self, lang: str, word: str) -> bool:
        return word in self._tables.get(lang, {})

    def vector(self, lang: str, word: str) -> np.ndarray:
        try:
            return self._tables[lang][word]
        except KeyError:
            raise EmbeddingError(f"no vector for {lang}{LANG_SEP}{word}") from None

    def vocabulary(self, lang: str) -> set[str]:
        return set(self._tables.get(lang, {}))

    def matrix_for_terms(self, tagged_terms: list[str]) -> np.ndarray:
        """Stack vectors for language-tagged terms, in the given order."""
        if self.dim is None:
            raise EmbeddingError("registry is empty")
        out = np.empty((len(tagged_terms), self.dim), dtype=np.float64)
        for i, term in enumerate(tagged_terms):
            lang, _, word = term.partition(LANG_SEP)
            out[i] = self.vector(lang, word)
        return out


def _prepare_metric(vectors: np.ndarray, metric: str) -> np.ndarray:
    if metric == METRIC_EUCLIDEAN:
        return vectors
    if metric == METRIC_COSINE:
        # euclidean distance on unit vectors orders identically to cosine
        # distance (||a-b||^2 = 2 - 2cos); zero vectors are left untouched.
        norms = np.linalg.norm(vectors, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        return vectors / safe[:, None]
    raise EmbeddingError(f"unknown metric {metric!r}")


def _knn_others(vectors: np.ndarray, m: int, metric: str = METRIC_EUCLIDEAN) -> np.ndarray:
    """Exact M-nearest-other-terms table, (L, min(m, L-1)) int64.

    Rows are ordered by (distance, term id). Candidates are preselected per
    block with the Gram-expanded distance, then re-ranked on exact
    elementwise squared distances so the result matches an exhaustive scan.
    """
    work = _prepare_metric(np.ascontiguousarray(vectors, dtype=np.float64), metric)
    n = work.shape[0]
    m_eff = min(m, n - 1)
    out = np.empty((n, m_eff), dtype=np.int64)
    if m_eff == 0:
        return out
    sq = np.einsum("ij,ij->i", work, work)
    pre = min(n, m_eff + 1 + _KNN_PAD)
    for start in range(0, n, _KNN_BLOCK):
        stop = min(start + _KNN_BLOCK, n)
        block = work[start:stop]
        d2 = sq[None, :] - 2.0 * (block @ work.T) + sq[start:stop, None]
        if pre < n:
            cand = np.argpartition(d2, pre - 1, axis=1)[:, :pre]
        else:
            cand = np.broadcast_to(np.arange(n), (stop - start, n))
        # ascending-id candidates + stable sort on exact distances gives the
        # (distance, id) tie rule without a per-row lexsort
        cand = np.sort(cand, axis=1)
        exact = ((work[cand] - block[:, None, :]) ** 2).sum(axis=2)
        order = np.argsort(exact, axis=1, kind="stable")
        ranked = np.take_along_axis(cand, order, axis=1)
        for r in range(stop - start):
            row = ranked[r]
            row = row[row != start + r]
            out[start + r] = row[:m_eff]
    return out


def nearest_terms(
    vectors: np.ndarray,
    term_id: int,
    m: int,
    mode: str = MODE_REPLACEMENT,
    metric: str = METRIC_EUCLIDEAN,
) -> np.ndarray:
    """The m closest terms to ``term_id`` across all languages.

    Ties break on ascending term id. Replacement mode excludes the query
    term; expansion mode prepends it. m larger than the vocabulary clamps.
    """
    if mode not in MODES:
        raise EmbeddingError(f"unknown mode {mode!r}")
    if m < 1:
        raise EmbeddingError(f"m must be >= 1, got {m}")
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if not 0 <= term_id < vectors.shape[0]:
        raise EmbeddingError(f"term id {term_id} out of range")
    work = _prepare_metric(vectors, metric)
    d2 = ((work - work[term_id]) ** 2).sum(axis=1)
    order = np.lexsort((np.arange(work.shape[0]), d2))
    others = order[order != term_id][:m]
    if mode == MODE_EXPANSION:
        return np.concatenate(([term_id], others)).astype(np.int64)
    return others.astype(np.int64)


class NeighborFunction:
    """Materialized map from each lexicon term to its closest terms.

    In replacement mode a term never maps to itself; in expansion mode the
    term is prepended to its neighbors. Both views share one precomputed
    table, so switching modes is free.
    """

    def __init__(
        self,
        others: np.ndarray,
        m: int,
        mode: str,
        metric: str = METRIC_EUCLIDEAN,
        lexicon_hash: str = "",
    ):
        if mode not in MODES:
            raise EmbeddingError(f"unknown mode {mode!r}")
        self._others = np.asarray(others, dtype=np.int64)
        self.m = m
        self.mode = mode
        self.metric = metric
        self.lexicon_hash = lexicon_hash

    def __len__(self) -> int:
        return self._others.shape[0]

    @property
    def width(self) -> int:
        """Neighbors stored per term (m clamped to the vocabulary size)."""
        return self._others.shape[1]

    def neighbors(self, term_id: int) -> np.ndarray:
        if self.mode == MODE_EXPANSION:
            return np.concatenate(([term_id], self._others[term_id]))
        return self._others[term_id]

    def gather(self, term_ids: np.ndarray) -> np.ndarray:
        """Sorted union of neighbors over a set of term ids."""
        term_ids = np.asarray(term_ids, dtype=np.int64)
        if term_ids.size == 0:
            return term_ids
        pool = self._others[term_ids].ravel()
        if self.mode == MODE_EXPANSION:
            pool = np.concatenate((pool, term_ids))
        return np.unique(pool)

    def with_mode(self, mode: str) -> "NeighborFunction":
        if mode == self.mode:
            return self
        return NeighborFunction(self._others, self.m, mode, self.metric, self.lexicon_hash)

    def save(self, path: str | Path) -> None:
        """Write the JSONL cache: a header record then one row per term."""
        with open(path, "w", encoding="utf-8") as f:
            header = {
                "m": self.m,
                "mode": self.mode,
                "metric": self.metric,
                "lexicon_hash": self.lexicon_hash,
            }
            f.write(json.dumps(header) + "\n")
            for term_id in range(len(self)):
                row = {"term": term_id, "neighbors": self.neighbors(term_id).tolist()}
                f.write(json.dumps(row) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "NeighborFunction":
        with open(path, encoding="utf-8") as f:
            header = json.loads(f.readline())
            for key in ("m", "mode", "metric", "lexicon_hash"):
                if key not in header:
                    raise EmbeddingError(f"neighbor cache missing header key {key!r}")
            mode = header["mode"]
            rows: list[list[int]] = []
            for lineno, line in enumerate(f, start=2):
                if not line.strip():
                    continue
                row = json.loads(line)
                ids = row["neighbors"]
                if row["term"] != len(rows):
                    raise EmbeddingError(f"neighbor cache line {lineno}: rows out of order")
                if mode == MODE_EXPANSION:
                    if not ids or ids[0] != row["term"]:
                        raise EmbeddingError(
                            f"neighbor cache line {lineno}: expansion row must start with the term"
                        )
                    ids = ids[1:]
                rows.append(ids)
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise EmbeddingError("neighbor cache rows have inconsistent widths")
        others = np.array(rows, dtype=np.int64) if rows else np.empty((0, 0), dtype=np.int64)
        return cls(others, header["m"], mode, header["metric"], header["lexicon_hash"])


def build_neighbor_function(
    lexicon: Lexicon,
    registry: EmbeddingRegistry,
    m: int,
    mode: str = MODE_REPLACEMENT,
    metric: str = METRIC_EUCLIDEAN,
) -> NeighborFunction:
    """Precompute the neighbor table for every lexicon term.

    Neighbors are drawn from the lexicon itself (only lexicon terms can
    contribute index weight downstream) and may come from any language.
    """
    if mode not in MODES:
        raise EmbeddingError(f"unknown mode {mode!r}")
    if metric not in METRICS:
        raise EmbeddingError(f"unknown metric {metric!r}")
    if m < 1:
        raise EmbeddingError(f"m must be >= 1, got {m}")
    vectors = registry.matrix_for_terms(lexicon.terms)
    others = _knn_others(vectors, m, metric)
    return NeighborFunction(others, m, mode, metric, lexicon.content_hash())
