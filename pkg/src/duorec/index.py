"""Term-document matrices, similarity scoring, and dual neighbor lists.

The word channel scores a document's own TF-IDF row against every other
document; the embedding channel first replaces (or expands) each of the
document's terms with its closest embedding-space terms and scores that
transformed row instead. Candidates are always the plain TF-IDF rows, and a
candidate's score is the dot product divided by the candidate row norm only;
the per-query norm is constant and cannot change the ranking.

The n x n similarity matrices are never materialized: per-query score rows
are computed from the sparse matrices in blocks and only top-K lists are
cached.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, EncodedDocument, Lexicon
from .embedding import MODES, NeighborFunction
from .errors import CacheLimitError, DuorecError, EmptyQueryError

SOURCE_WORD = "word"
SOURCE_EMBEDDING = "embedding"
SOURCE_BOTH = "both"

_SCORE_BLOCK = 256


@dataclass(frozen=True)
class TermDocMatrix:
    """Sparse document-term matrix with document frequencies and IDF.

    The binary variant stores 1.0 for presence; the TF-IDF variant stores
    log(n / df_j) (natural log). idf[j] is defined as 0 when df_j is 0 or n.
    """

    matrix: sp.csr_matrix
    df: np.ndarray
    idf: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_terms(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class EmbeddedTermDocMatrix:
    """TF-IDF matrix over the neighbor-transformed documents.

    Weights come from ``idf_source``, the IDF of the *original* binary
    matrix: a transformed document borrows each term's corpus-level weight.
    Terms whose original df is 0 (never occurring in any document) or n
    (zero IDF) carry no weight and are dropped.
    """

    matrix: sp.csr_matrix
    idf_source: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _rows_to_csr(rows: list[np.ndarray], n_terms: int, data_for: np.ndarray | None) -> sp.csr_matrix:
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    for i, ids in enumerate(rows):
        indptr[i + 1] = indptr[i] + ids.size
    indices = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    if indices.size and indices.max() >= n_terms:
        raise DuorecError(f"term id {int(indices.max())} out of range for {n_terms} terms")
    if data_for is None:
        data = np.ones(indices.size, dtype=np.float64)
    else:
        data = data_for[indices].astype(np.float64)
    mat = sp.csr_matrix((data, indices, indptr), shape=(len(rows), n_terms))
    mat.eliminate_zeros()
    return mat


def build_binary_tf(encoded: list[EncodedDocument], n_terms: int) -> TermDocMatrix:
    """Binary presence matrix: row i holds 1.0 at each of document i's terms."""
    rows = [e.term_ids for e in encoded]
    matrix = _rows_to_csr(rows, n_terms, None)
    indices = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    df = np.bincount(indices, minlength=n_terms).astype(np.int64)
    n = len(encoded)
    safe_df = np.where(df > 0, df, 1)
    idf = np.where(df > 0, np.log(n / safe_df), 0.0)
    return TermDocMatrix(matrix=matrix, df=df, idf=idf)


def build_tfidf(binary: TermDocMatrix) -> TermDocMatrix:
    """Replace each stored presence by log(n / df_j); zero weights drop out."""
    matrix = binary.matrix.copy()
    matrix.data = binary.idf[matrix.indices]
    matrix.eliminate_zeros()
    return TermDocMatrix(matrix=matrix, df=binary.df, idf=binary.idf)


def build_embedded_corpus(
    encoded: list[EncodedDocument], neighbor_fn: NeighborFunction
) -> list[np.ndarray]:
    """Union of the neighbor function over each document's terms.

    In replacement mode an original term survives only when some other term
    maps back to it; in expansion mode originals are always retained.
    """
    return [neighbor_fn.gather(e.term_ids) for e in encoded]


def build_embedded_tfidf(
    embedded_sets: list[np.ndarray], idf_source: np.ndarray
) -> EmbeddedTermDocMatrix:
    """Weight each transformed document by the original matrix's IDF."""
    n_terms = idf_source.shape[0]
    rows = [ids[idf_source[ids] != 0.0] for ids in embedded_sets]
    matrix = _rows_to_csr(rows, n_terms, idf_source)
    return EmbeddedTermDocMatrix(matrix=matrix, idf_source=idf_source)


def row_norms(matrix: sp.csr_matrix) -> np.ndarray:
    """Row L2 norms, accumulated in ascending term order per row.

    bincount adds strictly sequentially over the canonical CSR layout, so
    rows holding the same weight multiset in the same column order get
    bit-identical norms; grouped summations (pairwise/BLAS) would split
    mathematically tied scores by rounding and scramble the id tie rule.
    """
    rows = np.repeat(np.arange(matrix.shape[0]), np.diff(matrix.indptr))
    squares = matrix.data * matrix.data
    return np.sqrt(np.bincount(rows, weights=squares, minlength=matrix.shape[0]))


def candidate_scores(
    xt: sp.csr_matrix, inv_norms: np.ndarray, valid: np.ndarray, query_row: sp.spmatrix
) -> np.ndarray:
    """Dense score vector for one query row; invalid candidates get -inf."""
    scores = np.asarray((query_row @ xt).todense()).ravel() * inv_norms
    scores[~valid] = -np.inf
    return scores


def select_topn(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest scores; ties break on ascending index.

    Entries equal to -inf never qualify. This is a literal top-N: zero
    scores count unless the caller masked them out beforehand.
    """
    finite = scores > -np.inf
    k = min(k, int(finite.sum()))
    if k <= 0:
        return np.empty(0, dtype=np.int64)
    neg = -scores
    if k < scores.size:
        kth = np.partition(neg, k - 1)[k - 1]
        above = np.flatnonzero(neg < kth)
        ties = np.flatnonzero(neg == kth)[: k - above.size]
        sel = np.concatenate((above, ties))
    else:
        sel = np.flatnonzero(finite)
    order = np.lexsort((sel, neg[sel]))
    return sel[order].astype(np.int64)


@dataclass(frozen=True)
class IndexConfig:
    """Build-time knobs echoed through caches, bundles, and services."""

    m: int
    mode: str
    n_w: int
    n_e: int
    cache_k: int
    positive_only: bool = False
    metric: str = "euclidean"

    def __post_init__(self):
        if self.mode not in MODES:
            raise DuorecError(f"unknown mode {self.mode!r}")
        if self.m < 1:
            raise DuorecError(f"m must be >= 1, got {self.m}")
        if self.n_w + self.n_e < 1:
            raise DuorecError("n_w + n_e must be >= 1")
        if min(self.n_w, self.n_e) < 0:
            raise DuorecError("n_w and n_e must be >= 0")
        if self.cache_k < max(self.n_w, self.n_e):
            raise DuorecError(
                f"cache_k {self.cache_k} must cover max(n_w, n_e) = {max(self.n_w, self.n_e)}"
            )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class NeighborEntry:
    doc_id: str
    score: float
    source: str  # word | embedding | both
    word_rank: int | None = None
    embedding_rank: int | None = None


@dataclass(frozen=True)
class NeighborList:
    """Union of the two ranked per-source lists for one query document.

    ``word`` and ``embedding`` keep the raw per-source (doc_id, score) pairs;
    ``entries`` is the deduplicated union, word entries first, with a
    document present in both sources emitted once as source="both" carrying
    both ranks (its score is the word-channel score).
    """

    query_id: str
    entries: tuple[NeighborEntry, ...]
    word: tuple[tuple[str, float], ...]
    embedding: tuple[tuple[str, float], ...]


def _union_entries(
    query_id: str,
    word_pairs: list[tuple[str, float]],
    emb_pairs: list[tuple[str, float]],
) -> NeighborList:
    entries: list[NeighborEntry] = []
    slot: dict[str, int] = {}
    for rank, (doc_id, score) in enumerate(word_pairs, start=1):
        slot[doc_id] = len(entries)
        entries.append(NeighborEntry(doc_id, score, SOURCE_WORD, word_rank=rank))
    for rank, (doc_id, score) in enumerate(emb_pairs, start=1):
        if doc_id in slot:
            i = slot[doc_id]
            entries[i] = dataclasses.replace(
                entries[i], source=SOURCE_BOTH, embedding_rank=rank
            )
        else:
            entries.append(
                NeighborEntry(doc_id, score, SOURCE_EMBEDDING, embedding_rank=rank)
            )
    return NeighborList(
        query_id=query_id,
        entries=tuple(entries),
        word=tuple(word_pairs),
        embedding=tuple(emb_pairs),
    )


class DualIndex:
    """Built index: matrices, per-document top-K caches, and query surface.

    Immutable after construction; all query methods are safe to call
    concurrently. Caches hold both replacement and expansion lists so a
    single bundle can serve either mode's graph.
    """

    def __init__(
        self,
        corpus: Corpus,
        lexicon: Lexicon,
        encoded: list[EncodedDocument],
        config: IndexConfig,
        y: TermDocMatrix,
        x: TermDocMatrix,
        xemb: dict[str, EmbeddedTermDocMatrix],
        word_cache: list[tuple[np.ndarray, np.ndarray]],
        emb_cache: dict[str, list[tuple[np.ndarray, np.ndarray]]],
        emb_empty: dict[str, np.ndarray],
        hashes: dict | None = None,
        dim: int | None = None,
    ):
        self.corpus = corpus
        self.lexicon = lexicon
        self.encoded = encoded
        self.config = config
        self.y = y
        self.x = x
        self.xemb = xemb
        self._word_cache = word_cache
        self._emb_cache = emb_cache
        # emptiness is a property of the query rows, not of the result lists:
        # a valid query can legitimately have zero cached candidates
        self._word_empty = np.asarray(np.diff(x.matrix.indptr) == 0)
        self._emb_empty = {m: np.asarray(v, dtype=bool) for m, v in emb_empty.items()}
        self.hashes = hashes or {}
        self.dim = dim
        self.x_norms = row_norms(x.matrix)
        self._xt = x.matrix.T.tocsr()
        self._valid = self.x_norms > 0
        self._inv_norms = np.where(self._valid, self.x_norms, 1.0) ** -1
        self._inv_norms[~self._valid] = 0.0

    # -- basic lookups ----------------------------------------------------

    @property
    def n(self) -> int:
        return self.corpus.n

    @property
    def cache_k(self) -> int:
        return self.config.cache_k

    @property
    def has_embedded_matrices(self) -> bool:
        return bool(self.xemb)

    @property
    def empty_document_count(self) -> int:
        return sum(1 for e in self.encoded if e.empty)

    def _position(self, query) -> int:
        if isinstance(query, (int, np.integer)):
            pos = int(query)
            if not 0 <= pos < self.n:
                raise KeyError(f"document position {pos} out of range")
            return pos
        return self.corpus.position(query)

    def _resolve_mode(self, mode: str | None) -> str:
        mode = mode or self.config.mode
        if mode not in MODES:
            raise DuorecError(f"unknown mode {mode!r}")
        if mode not in self._emb_cache:
            raise DuorecError(f"index has no cached lists for mode {mode!r}")
        return mode

    # -- querying ---------------------------------------------------------

    def topn_similar(self, query, source: str, n: int, mode: str | None = None) -> list[tuple[str, float]]:
        """Freshly computed top-n candidates for one query document.

        ``source`` selects the query row: "word" uses the document's own
        TF-IDF row, "embedding" the neighbor-transformed row. Requires the
        in-memory matrices (a bundle loaded from disk only serves caches).
        """
        pos = self._position(query)
        doc_id = self.corpus[pos].id
        if source == SOURCE_WORD:
            q_row = self.x.matrix[pos]
        elif source == SOURCE_EMBEDDING:
            mode = mode or self.config.mode
            if mode not in self.xemb:
                raise DuorecError(
                    "embedded matrices are not available on a reloaded bundle; "
                    "use the cached neighbor lists"
                )
            q_row = self.xemb[mode].matrix[pos]
        else:
            raise DuorecError(f"unknown source {source!r}")
        if q_row.nnz == 0:
            raise EmptyQueryError(doc_id, source)
        scores = candidate_scores(self._xt, self._inv_norms, self._valid, q_row)
        scores[pos] = -np.inf
        if self.config.positive_only:
            scores[scores <= 0] = -np.inf
        sel = select_topn(scores, n)
        return [(self.corpus[int(i)].id, float(scores[i])) for i in sel]

    def cached_neighbors(
        self, query, source: str, n: int, mode: str | None = None
    ) -> list[tuple[str, float]]:
        """Top-n (doc_id, score) pairs from the build-time cache."""
        pos = self._position(query)
        if n > self.cache_k:
            raise CacheLimitError(
                f"requested {n} neighbors but the index caches only "
                f"{self.cache_k}; rebuild with a larger cache_k"
            )
        if source == SOURCE_WORD:
            ids, scores = self._word_cache[pos]
        elif source == SOURCE_EMBEDDING:
            ids, scores = self._emb_cache[self._resolve_mode(mode)][pos]
        else:
            raise DuorecError(f"unknown source {source!r}")
        return [
            (self.corpus[int(i)].id, float(s))
            for i, s in zip(ids[:n], scores[:n])
        ]

    def dual_neighbors(
        self,
        query,
        n_w: int | None = None,
        n_e: int | None = None,
        mode: str | None = None,
    ) -> NeighborList:
        """Union of the word and embedding top lists for one document.

        Raises EmptyQueryError only when both channels are empty; a single
        empty channel degrades to a one-source list, as do n_w=0 or n_e=0.
        """
        pos = self._position(query)
        doc_id = self.corpus[pos].id
        n_w = self.config.n_w if n_w is None else n_w
        n_e = self.config.n_e if n_e is None else n_e
        if n_w + n_e < 1:
            raise DuorecError("n_w + n_e must be >= 1")
        word_pairs = self.cached_neighbors(pos, SOURCE_WORD, n_w) if n_w > 0 else []
        emb_pairs = (
            self.cached_neighbors(pos, SOURCE_EMBEDDING, n_e, mode) if n_e > 0 else []
        )
        if self._word_empty[pos] and self._emb_empty[self._resolve_mode(mode)][pos]:
            raise EmptyQueryError(doc_id, "word+embedding")
        return _union_entries(doc_id, word_pairs, emb_pairs)

    def query_row_empty(self, query, source: str, mode: str | None = None) -> bool:
        """Whether the query row for a channel has no indexed terms."""
        pos = self._position(query)
        if source == SOURCE_WORD:
            return bool(self._word_empty[pos])
        if source == SOURCE_EMBEDDING:
            return bool(self._emb_empty[self._resolve_mode(mode)][pos])
        raise DuorecError(f"unknown source {source!r}")

    def rank_query_terms(self, tagged_terms: list[str], n: int) -> list[tuple[str, float]]:
        """Score a free-text query (already tokenized and tagged) against the corpus.

        The query becomes a virtual document: binary presence of its lexicon
        terms weighted by IDF, scored exactly like topn_similar. Raises
        EmptyQueryError when no query term is in the lexicon.
        """
        ids = sorted({
            i for t in tagged_terms if (i := self.lexicon.id_for(t)) is not None
        })
        if not ids:
            raise EmptyQueryError("(query)", "search")
        ids_arr = np.array(ids, dtype=np.int64)
        data = self.x.idf[ids_arr]
        q_row = sp.csr_matrix(
            (data, ids_arr, np.array([0, ids_arr.size])), shape=(1, len(self.lexicon))
        )
        q_row.eliminate_zeros()
        if q_row.nnz == 0:
            raise EmptyQueryError("(query)", "search")
        scores = candidate_scores(self._xt, self._inv_norms, self._valid, q_row)
        if self.config.positive_only:
            scores[scores <= 0] = -np.inf
        sel = select_topn(scores, n)
        return [(self.corpus[int(i)].id, float(scores[i])) for i in sel]

    # -- serialization support ---------------------------------------------

    def cache_row(self, pos: int, mode: str) -> tuple[list, list]:
        """Cached (word, emb) pair lists with external doc ids, full depth."""
        w_ids, w_scores = self._word_cache[pos]
        e_ids, e_scores = self._emb_cache[mode][pos]
        word = [[self.corpus[int(i)].id, float(s)] for i, s in zip(w_ids, w_scores)]
        emb = [[self.corpus[int(i)].id, float(s)] for i, s in zip(e_ids, e_scores)]
        return word, emb

    @property
    def cached_modes(self) -> list[str]:
        return sorted(self._emb_cache)


def _batch_topk(
    queries: sp.csr_matrix,
    xt: sp.csr_matrix,
    inv_norms: np.ndarray,
    valid: np.ndarray,
    k: int,
    positive_only: bool,
    exclude_diagonal: bool,
) -> list[tuple[np.ndarray, np.ndarray]]:
    n_q = queries.shape[0]
    nnz_per_row = np.diff(queries.indptr)
    out: list[tuple[np.ndarray, np.ndarray]] = []
    empty = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    for start in range(0, n_q, _SCORE_BLOCK):
        stop = min(start + _SCORE_BLOCK, n_q)
        block = np.asarray((queries[start:stop] @ xt).todense()) * inv_norms[None, :]
        block[:, ~valid] = -np.inf
        if positive_only:
            block[block <= 0] = -np.inf
        for r in range(stop - start):
            pos = start + r
            if nnz_per_row[pos] == 0:
                out.append(empty)
                continue
            row = block[r]
            if exclude_diagonal:
                row = row.copy()
                row[pos] = -np.inf
            sel = select_topn(row, k)
            out.append((sel, row[sel].astype(np.float64)))
    return out


def build_dual_index(
    corpus: Corpus,
    lexicon: Lexicon,
    encoded: list[EncodedDocument],
    neighbor_fn: NeighborFunction,
    config: IndexConfig,
    cache_both_modes: bool = True,
    hashes: dict | None = None,
    dim: int | None = None,
) -> DualIndex:
    """Build matrices and per-document top-K caches in one pass.

    With ``cache_both_modes`` (the default) the embedding channel is cached
    for replacement and expansion alike; the neighbor table is shared, so
    the extra mode costs one more scoring pass, not a second kNN build.
    """
    if [e.doc_id for e in encoded] != [d.id for d in corpus]:
        raise DuorecError("encoded documents must align with the corpus order")
    if neighbor_fn.lexicon_hash and neighbor_fn.lexicon_hash != lexicon.content_hash():
        raise DuorecError("neighbor function was built for a different lexicon")
    y = build_binary_tf(encoded, len(lexicon))
    x = build_tfidf(y)
    norms = row_norms(x.matrix)
    valid = norms > 0
    inv_norms = np.where(valid, norms, 1.0) ** -1
    inv_norms[~valid] = 0.0
    xt = x.matrix.T.tocsr()

    modes = list(MODES) if cache_both_modes else [config.mode]
    xemb: dict[str, EmbeddedTermDocMatrix] = {}
    emb_cache: dict[str, list[tuple[np.ndarray, np.ndarray]]] = {}
    emb_empty: dict[str, np.ndarray] = {}
    for mode in modes:
        nf = neighbor_fn.with_mode(mode)
        sets = build_embedded_corpus(encoded, nf)
        xemb[mode] = build_embedded_tfidf(sets, y.idf)
        emb_empty[mode] = np.diff(xemb[mode].matrix.indptr) == 0
        emb_cache[mode] = _batch_topk(
            xemb[mode].matrix, xt, inv_norms, valid,
            config.cache_k, config.positive_only, exclude_diagonal=True,
        )
    word_cache = _batch_topk(
        x.matrix, xt, inv_norms, valid,
        config.cache_k, config.positive_only, exclude_diagonal=True,
    )
    return DualIndex(
        corpus=corpus,
        lexicon=lexicon,
        encoded=encoded,
        config=config,
        y=y,
        x=x,
        xemb=xemb,
        word_cache=word_cache,
        emb_cache=emb_cache,
        emb_empty=emb_empty,
        hashes=hashes,
        dim=dim,
    )
