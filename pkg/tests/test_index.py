import math

import numpy as np
import pytest

from duorec.corpus import Corpus, Document, EncodedDocument, build_lexicon, encode_documents
from duorec.embedding import (
    EmbeddingRegistry,
    MODE_EXPANSION,
    MODE_REPLACEMENT,
    NeighborFunction,
    build_neighbor_function,
)
from duorec.errors import CacheLimitError, DuorecError, EmptyQueryError
from duorec.index import (
    IndexConfig,
    build_binary_tf,
    build_dual_index,
    build_embedded_corpus,
    build_embedded_tfidf,
    build_tfidf,
    select_topn,
)

import oracles


def enc(doc_id, ids):
    return EncodedDocument(doc_id, np.array(ids, dtype=np.int64))


class TestBinaryTf:
    def test_rows_and_df(self):
        y = build_binary_tf([enc("0", [0, 1]), enc("1", [0])], 2)
        assert y.matrix.toarray().tolist() == [[1.0, 1.0], [1.0, 0.0]]
        assert y.df.tolist() == [2, 1]

    def test_empty_document_row(self):
        y = build_binary_tf([enc("0", []), enc("1", [1])], 2)
        assert y.matrix[0].nnz == 0

    def test_df_matches_dense_column_sums(self):
        rng = np.random.default_rng(0)
        rows = [enc(str(i), np.flatnonzero(rng.random(40) < 0.2)) for i in range(200)]
        y = build_binary_tf(rows, 40)
        dense = np.zeros((200, 40))
        for i, e in enumerate(rows):
            dense[i, e.term_ids] = 1
        assert y.df.tolist() == dense.sum(axis=0).astype(int).tolist()


class TestTfidf:
    def test_all_document_term_has_zero_weight(self):
        y = build_binary_tf([enc("0", [0]), enc("1", [0]), enc("2", [0, 1])], 2)
        x = build_tfidf(y)
        assert x.idf[0] == 0.0
        # zero-weight entries are dropped from the sparse rows
        assert x.matrix[:, 0].nnz == 0

    def test_weights_match_hand_computation(self):
        y3 = build_binary_tf([enc("0", [0]), enc("1", [1]), enc("2", [1])], 2)
        x3 = build_tfidf(y3)
        assert x3.matrix[0, 0] == pytest.approx(math.log(3), rel=1e-15)
        y4 = build_binary_tf(
            [enc("0", [0]), enc("1", [0]), enc("2", [1]), enc("3", [1])], 2
        )
        x4 = build_tfidf(y4)
        assert x4.matrix[0, 0] == pytest.approx(math.log(2), rel=1e-15)


class TestEmbeddedCorpus:
    def test_single_term_replacement_union(self):
        nf = NeighborFunction(np.array([[1, 2], [0, 2], [0, 1]]), 2, MODE_REPLACEMENT)
        sets = build_embedded_corpus([enc("0", [0])], nf)
        assert sets[0].tolist() == [1, 2]

    def test_mutual_neighbors_reintroduce_originals(self):
        nf = NeighborFunction(np.array([[1], [0], [0]]), 1, MODE_REPLACEMENT)
        sets = build_embedded_corpus([enc("0", [0, 1])], nf)
        assert sets[0].tolist() == [0, 1]

    def test_empty_document(self):
        nf = NeighborFunction(np.array([[1], [0]]), 1, MODE_REPLACEMENT)
        sets = build_embedded_corpus([enc("0", [])], nf)
        assert sets[0].size == 0

    def test_expansion_superset_of_replacement(self):
        rng = np.random.default_rng(4)
        others = np.array([rng.permutation(10)[:3] for _ in range(10)])
        for row, t in zip(others, range(10)):
            others[t] = [v if v != t else (t + 1) % 10 for v in row]
        repl = NeighborFunction(others, 3, MODE_REPLACEMENT)
        exp = repl.with_mode(MODE_EXPANSION)
        docs = [enc(str(i), sorted(rng.permutation(10)[:4].tolist())) for i in range(5)]
        for e, r_set, x_set in zip(docs, build_embedded_corpus(docs, repl),
                                   build_embedded_corpus(docs, exp)):
            assert set(x_set) >= set(r_set)
            assert set(x_set) >= set(e.term_ids.tolist())


class TestEmbeddedTfidf:
    def test_weight_from_original_idf(self):
        idf = np.array([math.log(3), 0.0])
        m = build_embedded_tfidf([np.array([0]), np.array([1])], idf)
        assert m.matrix[0, 0] == pytest.approx(math.log(3), rel=1e-15)
        # df == n means zero weight: entry dropped
        assert m.matrix[1].nnz == 0

    def test_df_zero_terms_dropped(self):
        idf = np.array([1.0, 0.0])  # term 1 never occurs in the corpus
        m = build_embedded_tfidf([np.array([0, 1])], idf)
        assert m.matrix[0].nnz == 1


class TestSelectTopn:
    def test_ties_break_ascending(self):
        scores = np.array([0.5, 1.0, 1.0, 0.1])
        assert select_topn(scores, 2).tolist() == [1, 2]
        assert select_topn(scores, 3).tolist() == [1, 2, 0]

    def test_neg_inf_never_selected(self):
        scores = np.array([-np.inf, 0.0, -np.inf, 0.0])
        assert select_topn(scores, 10).tolist() == [1, 3]

    def test_matches_lexsort_reference(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            scores = rng.choice([0.0, 0.25, 0.5, 1.0], size=30)
            scores[rng.random(30) < 0.2] = -np.inf
            k = int(rng.integers(1, 15))
            order = np.lexsort((np.arange(30), -scores))
            expected = [int(i) for i in order if scores[i] > -np.inf][:k]
            assert select_topn(scores, k).tolist() == expected


def small_index(mode=MODE_REPLACEMENT, positive_only=False, n_w=2, n_e=2, cache_k=4):
    rng = np.random.default_rng(21)
    words = [f"w{i}" for i in range(12)]
    registry = EmbeddingRegistry.from_dict({"en": {w: rng.normal(size=5) for w in words}})
    docs = [
        Document("d0", "w0 w1 w2", "en"),
        Document("d1", "w0 w1 w2", "en"),
        Document("d2", "w3 w4", "en"),
        Document("d3", "w5 w6 w7", "en"),
        Document("d4", "w8 w9", "en"),
        Document("d5", "w10 w11 w0", "en"),
    ]
    corpus = Corpus(docs)
    lexicon = build_lexicon(corpus, registry, min_df=1)
    encoded = encode_documents(corpus, lexicon)
    nf = build_neighbor_function(lexicon, registry, m=3, mode=mode)
    config = IndexConfig(m=3, mode=mode, n_w=n_w, n_e=n_e, cache_k=cache_k,
                         positive_only=positive_only)
    return build_dual_index(corpus, lexicon, encoded, nf, config)


class TestTopnSimilar:
    def test_identical_docs_score_shared_idf_sum(self):
        index = small_index()
        pairs = index.topn_similar("d0", "word", 1)
        assert pairs[0][0] == "d1"
        # both docs hold exactly the same three terms, so the score is the
        # candidate norm itself: sqrt(sum of idf^2)
        ids = index.encoded[0].term_ids
        expected = math.sqrt(float((index.x.idf[ids] ** 2).sum()))
        assert pairs[0][1] == pytest.approx(expected, rel=1e-12)

    def test_orthogonal_docs_zero_score_padding(self):
        index = small_index()
        pairs = index.topn_similar("d2", "word", 5)
        scores = dict(pairs)
        assert scores["d3"] == 0.0  # no shared terms, padded zero score
        only_positive = small_index(positive_only=True)
        pruned = dict(only_positive.topn_similar("d2", "word", 5))
        assert "d3" not in pruned

    def test_matches_dense_oracle_on_random_corpus(self):
        rng = np.random.default_rng(17)
        n, n_terms = 100, 60
        vectors = rng.normal(size=(n_terms, 6))
        words = [f"t{i:02d}" for i in range(n_terms)]
        registry = EmbeddingRegistry.from_dict(
            {"xx": {w: vectors[i] for i, w in enumerate(words)}}
        )
        docs = []
        for i in range(n):
            size = rng.integers(1, 8)
            text = " ".join(rng.choice(words, size=size, replace=True))
            docs.append(Document(str(i), text, "xx"))
        corpus = Corpus(docs)
        lexicon = build_lexicon(corpus, registry, min_df=1)
        encoded = encode_documents(corpus, lexicon)
        lex_vectors = registry.matrix_for_terms(lexicon.terms)
        nf = build_neighbor_function(lexicon, registry, m=4)
        config = IndexConfig(m=4, mode=MODE_REPLACEMENT, n_w=10, n_e=10, cache_k=10)
        index = build_dual_index(corpus, lexicon, encoded, nf, config)

        enc_rows = [e.term_ids for e in encoded]
        word_lists, emb_lists = oracles.dense_dual_lists(
            enc_rows, lex_vectors, m=4, mode=MODE_REPLACEMENT, k=10
        )
        for i in range(n):
            expected = [corpus[p].id for p, _ in word_lists[i]]
            if expected:
                got = [d for d, _ in index.topn_similar(i, "word", 10)]
                assert got == expected, f"word mismatch at doc {i}"
            expected_emb = [corpus[p].id for p, _ in emb_lists[i]]
            if expected_emb:
                got = [d for d, _ in index.topn_similar(i, "embedding", 10)]
                assert got == expected_emb, f"embedding mismatch at doc {i}"

    def test_empty_query_raises(self):
        rng = np.random.default_rng(3)
        registry = EmbeddingRegistry.from_dict({"en": {"a": rng.normal(size=3), "b": rng.normal(size=3)}})
        corpus = Corpus([
            Document("x", "a b", "en"),
            Document("y", "a b", "en"),
            Document("z", "zzz qqq", "en"),
        ])
        lexicon = build_lexicon(corpus, registry, min_df=1)
        encoded = encode_documents(corpus, lexicon)
        nf = build_neighbor_function(lexicon, registry, m=1)
        config = IndexConfig(m=1, mode=MODE_REPLACEMENT, n_w=1, n_e=1, cache_k=2)
        index = build_dual_index(corpus, lexicon, encoded, nf, config)
        with pytest.raises(EmptyQueryError, match="z"):
            index.topn_similar("z", "word", 1)
        with pytest.raises(EmptyQueryError):
            index.dual_neighbors("z")


class TestDualNeighbors:
    def test_ne_zero_degrades_to_word_only(self):
        index = small_index()
        result = index.dual_neighbors("d0", n_w=2, n_e=0)
        word_only = index.topn_similar("d0", "word", 2)
        assert list(result.word) == word_only
        assert result.embedding == ()
        assert all(e.source == "word" for e in result.entries)

    def test_union_marks_both(self):
        index = small_index()
        result = index.dual_neighbors("d0", n_w=3, n_e=3)
        word_ids = {d for d, _ in result.word}
        emb_ids = {d for d, _ in result.embedding}
        for entry in result.entries:
            if entry.doc_id in word_ids and entry.doc_id in emb_ids:
                assert entry.source == "both"
                assert entry.word_rank is not None and entry.embedding_rank is not None
        assert len({e.doc_id for e in result.entries}) == len(result.entries)

    def test_union_cardinality_bounds(self):
        index = small_index()
        for n_w, n_e in [(1, 1), (2, 2), (3, 1), (0, 3)]:
            result = index.dual_neighbors("d0", n_w=n_w, n_e=n_e)
            lo = max(len(result.word), len(result.embedding))
            assert lo <= len(result.entries) <= len(result.word) + len(result.embedding)

    def test_query_never_among_entries(self):
        index = small_index()
        for doc in index.corpus:
            result = index.dual_neighbors(doc.id, n_w=3, n_e=3)
            assert doc.id not in {e.doc_id for e in result.entries}

    def test_cache_limit_enforced(self):
        index = small_index(cache_k=3)
        with pytest.raises(CacheLimitError, match="rebuild"):
            index.dual_neighbors("d0", n_w=4, n_e=0)

    def test_cached_matches_fresh(self):
        index = small_index(cache_k=4)
        for doc in index.corpus:
            for source in ("word", "embedding"):
                fresh = index.topn_similar(doc.id, source, 4)
                cached = index.cached_neighbors(doc.id, source, 4)
                assert fresh == cached

    def test_determinism_across_rebuilds(self):
        a, b = small_index(), small_index()
        for doc in a.corpus:
            assert a.dual_neighbors(doc.id) == b.dual_neighbors(doc.id)


class TestRowNormBounds:
    def test_l0_bounds(self):
        index = small_index()
        m = index.config.m
        for pos, e in enumerate(index.encoded):
            assert index.x.matrix[pos].nnz <= e.term_ids.size
            assert index.xemb[MODE_REPLACEMENT].matrix[pos].nnz <= m * max(e.term_ids.size, 1)
            assert index.xemb[MODE_EXPANSION].matrix[pos].nnz <= (m + 1) * max(e.term_ids.size, 1)


class TestConfigValidation:
    def test_rejects_bad_mode(self):
        with pytest.raises(DuorecError):
            IndexConfig(m=1, mode="sideways", n_w=1, n_e=1, cache_k=2)

    def test_rejects_insufficient_cache(self):
        with pytest.raises(DuorecError):
            IndexConfig(m=1, mode=MODE_REPLACEMENT, n_w=5, n_e=1, cache_k=3)

    def test_rejects_zero_neighbors(self):
        with pytest.raises(DuorecError):
            IndexConfig(m=1, mode=MODE_REPLACEMENT, n_w=0, n_e=0, cache_k=1)
