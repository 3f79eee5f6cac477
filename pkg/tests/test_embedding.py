import io

import numpy as np
import pytest

from duorec.corpus import Lexicon, build_lexicon
from duorec.embedding import (
    EmbeddingRegistry,
    MODE_EXPANSION,
    MODE_REPLACEMENT,
    NeighborFunction,
    build_neighbor_function,
    load_embeddings,
    nearest_terms,
)
from duorec.errors import EmbeddingError


class TestLoadEmbeddings:
    def test_parse_simple_table(self):
        dim, table = load_embeddings(io.StringIO("2 3\na 1 0 0\nb 0 1 0\n"))
        assert dim == 3
        assert set(table) == {"a", "b"}
        np.testing.assert_array_equal(table["a"], [1.0, 0.0, 0.0])

    def test_malformed_row_names_line(self):
        with pytest.raises(EmbeddingError, match="line 2"):
            load_embeddings(io.StringIO("1 3\na 1 0\n"))

    def test_bad_header(self):
        with pytest.raises(EmbeddingError, match="line 1"):
            load_embeddings(io.StringIO("vectors incoming\n"))

    def test_nan_rejected(self):
        with pytest.raises(EmbeddingError, match="line 2"):
            load_embeddings(io.StringIO("1 2\na nan 0\n"))

    def test_restrict_to(self):
        dim, table = load_embeddings(
            io.StringIO("3 2\na 1 0\nb 0 1\nc 1 1\n"), restrict_to={"a", "c"}
        )
        assert set(table) == {"a", "c"}

    def test_registry_dimension_consistency(self):
        reg = EmbeddingRegistry()
        reg.add("en", {"a": np.zeros(3)})
        with pytest.raises(EmbeddingError, match="dimension"):
            reg.add("fr", {"b": np.zeros(4)})

    def test_registry_from_file_hashes(self, tmp_path):
        path = tmp_path / "en.vec"
        path.write_text("1 2\nword 0.5 0.25\n")
        reg = EmbeddingRegistry()
        reg.load("en", path)
        assert reg.dim == 2
        assert "en" in reg.source_hashes


class TestNearestTerms:
    VECTORS = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]])

    def test_replacement_excludes_self(self):
        assert nearest_terms(self.VECTORS, 0, 1, MODE_REPLACEMENT).tolist() == [1]

    def test_expansion_prepends_self(self):
        assert nearest_terms(self.VECTORS, 0, 2, MODE_EXPANSION).tolist() == [0, 1, 2]

    def test_clamps_to_vocabulary(self):
        assert nearest_terms(self.VECTORS, 1, 10, MODE_REPLACEMENT).tolist() == [0, 2]

    def test_ties_break_by_term_id(self):
        vectors = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        # terms 1, 2 and 3 are all at distance 1 from term 0
        assert nearest_terms(vectors, 0, 3, MODE_REPLACEMENT).tolist() == [1, 2, 3]

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(42)
        vectors = rng.normal(size=(400, 6))
        for query in rng.integers(0, 400, size=25):
            d2 = ((vectors - vectors[query]) ** 2).sum(axis=1)
            order = np.lexsort((np.arange(400), d2))
            expected = [int(i) for i in order if i != query][:7]
            got = nearest_terms(vectors, int(query), 7, MODE_REPLACEMENT)
            assert got.tolist() == expected

    def test_cross_language_reach(self, translation_fixture):
        corpus, registry = translation_fixture
        lexicon = build_lexicon(corpus, registry, min_df=1)
        nf = build_neighbor_function(lexicon, registry, m=1)
        school = lexicon.term_to_id["en:school"]
        ecole = lexicon.term_to_id["fr:ecole"]
        assert nf.neighbors(school).tolist() == [ecole]
        assert nf.neighbors(ecole).tolist() == [school]


class TestNeighborFunction:
    def _lexicon(self, n):
        terms = [f"en:w{i:03d}" for i in range(n)]
        return Lexicon(terms, np.ones(n, dtype=np.int64))

    def test_single_term_lexicon_has_empty_neighborhoods(self):
        lexicon = self._lexicon(1)
        registry = EmbeddingRegistry.from_dict({"en": {"w000": [1.0, 2.0]}})
        nf = build_neighbor_function(lexicon, registry, m=5)
        assert nf.neighbors(0).size == 0

    def test_mode_views_share_table(self):
        rng = np.random.default_rng(3)
        lexicon = self._lexicon(10)
        registry = EmbeddingRegistry.from_dict(
            {"en": {f"w{i:03d}": rng.normal(size=4) for i in range(10)}}
        )
        nf = build_neighbor_function(lexicon, registry, m=3, mode=MODE_REPLACEMENT)
        exp = nf.with_mode(MODE_EXPANSION)
        for t in range(10):
            assert t not in nf.neighbors(t)
            assert exp.neighbors(t)[0] == t
            assert exp.neighbors(t).size == nf.neighbors(t).size + 1

    def test_gather_unions_and_sorts(self):
        others = np.array([[1, 2], [0, 2], [0, 1]])
        nf = NeighborFunction(others, m=2, mode=MODE_REPLACEMENT)
        assert nf.gather(np.array([0, 1])).tolist() == [0, 1, 2]
        assert nf.gather(np.array([], dtype=np.int64)).size == 0

    def test_cache_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        lexicon = self._lexicon(12)
        registry = EmbeddingRegistry.from_dict(
            {"en": {f"w{i:03d}": rng.normal(size=4) for i in range(12)}}
        )
        for mode in (MODE_REPLACEMENT, MODE_EXPANSION):
            nf = build_neighbor_function(lexicon, registry, m=4, mode=mode)
            path = tmp_path / f"nf-{mode}.jsonl"
            nf.save(path)
            loaded = NeighborFunction.load(path)
            assert loaded.mode == mode
            assert loaded.m == 4
            assert loaded.lexicon_hash == lexicon.content_hash()
            for t in range(12):
                assert loaded.neighbors(t).tolist() == nf.neighbors(t).tolist()

    def test_no_duplicates_in_neighbor_lists(self):
        rng = np.random.default_rng(9)
        lexicon = self._lexicon(30)
        registry = EmbeddingRegistry.from_dict(
            {"en": {f"w{i:03d}": rng.normal(size=3) for i in range(30)}}
        )
        nf = build_neighbor_function(lexicon, registry, m=10)
        for t in range(30):
            ids = nf.neighbors(t)
            assert len(set(ids.tolist())) == ids.size
