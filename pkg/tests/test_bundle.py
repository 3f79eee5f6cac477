import json

import pytest

from duorec.bundle import load_bundle, read_bundle_header, save_bundle
from duorec.errors import BundleError, EmptyQueryError


def test_round_trip_is_byte_identical(bilingual_index, tmp_path):
    first = tmp_path / "a.jsonl"
    second = tmp_path / "b.jsonl"
    save_bundle(bilingual_index, first, built_at=1000.0)
    reloaded = load_bundle(first)
    save_bundle(reloaded, second, built_at=1000.0)
    assert first.read_bytes() == second.read_bytes()


def test_reloaded_neighbor_lists_identical(bilingual_index, tmp_path):
    path = tmp_path / "bundle.jsonl"
    save_bundle(bilingual_index, path)
    reloaded = load_bundle(path)
    assert reloaded.cached_modes == bilingual_index.cached_modes
    for doc in bilingual_index.corpus:
        for mode in bilingual_index.cached_modes:
            try:
                original = bilingual_index.dual_neighbors(doc.id, mode=mode)
            except EmptyQueryError:
                with pytest.raises(EmptyQueryError):
                    reloaded.dual_neighbors(doc.id, mode=mode)
                continue
            assert reloaded.dual_neighbors(doc.id, mode=mode) == original


def test_reloaded_search_matches(bilingual_index, tmp_path):
    path = tmp_path / "bundle.jsonl"
    save_bundle(bilingual_index, path)
    reloaded = load_bundle(path)
    query = ["en:carrots", "en:field"]
    assert reloaded.rank_query_terms(query, 5) == bilingual_index.rank_query_terms(query, 5)


def test_header_readable_without_full_load(bilingual_index, tmp_path):
    path = tmp_path / "bundle.jsonl"
    save_bundle(bilingual_index, path, built_at=5.0)
    header = read_bundle_header(path)
    assert header["n"] == bilingual_index.n
    assert header["built_at"] == 5.0
    assert header["config"]["mode"] == "replacement"


def test_corrupt_file_rejected(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("not json at all\n")
    with pytest.raises(BundleError):
        read_bundle_header(path)
    with pytest.raises(BundleError):
        load_bundle(path)


def test_wrong_format_tag_rejected(tmp_path):
    path = tmp_path / "other.jsonl"
    path.write_text(json.dumps({"kind": "header", "format": "other", "version": 1}) + "\n")
    with pytest.raises(BundleError, match="not a duorec bundle"):
        read_bundle_header(path)


def test_document_fields_survive(bilingual_index, tmp_path):
    path = tmp_path / "bundle.jsonl"
    save_bundle(bilingual_index, path)
    reloaded = load_bundle(path)
    original = bilingual_index.corpus.get("a")
    restored = reloaded.corpus.get("a")
    assert restored.text == original.text
    assert restored.image_url == original.image_url
    assert restored.meta == original.meta
