"""On-disk index bundles: one JSONL file holding everything a server needs.

Layout: a header record (format tag, config, hashes, build metadata), then
one record per document, the lexicon, the encoded documents, and finally the
cached neighbor lists. Scores round-trip exactly because Python serializes
floats with their shortest exact decimal representation (up to 17
significant digits); reload followed by re-serialization is byte-identical.
"""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import IO

import numpy as np

from .corpus import Corpus, Document, EncodedDocument, Lexicon
from .errors import BundleError
from .index import DualIndex, IndexConfig, build_binary_tf, build_tfidf
from .embedding import MODES

FORMAT_TAG = "duorec-bundle"
FORMAT_VERSION = 1


def _doc_record(doc: Document) -> dict:
    rec: dict = {"kind": "document", "id": doc.id, "text": doc.text, "lang": doc.lang}
    if doc.image_url:
        rec["image_url"] = doc.image_url
    if doc.meta:
        rec["meta"] = doc.meta
    return rec


def bundle_header(index: DualIndex, built_at: float | None = None) -> dict:
    return {
        "kind": "header",
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "built_at": built_at if built_at is not None else time.time(),
        "config": index.config.as_dict(),
        "n": index.n,
        "lexicon_size": len(index.lexicon),
        "dim": index.dim,
        "modes": index.cached_modes,
        "hashes": index.hashes,
    }


def save_bundle(index: DualIndex, path: str | Path, built_at: float | None = None) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(bundle_header(index, built_at), ensure_ascii=False) + "\n")
        for doc in index.corpus:
            f.write(json.dumps(_doc_record(doc), ensure_ascii=False) + "\n")
        lex = {
            "kind": "lexicon",
            "terms": index.lexicon.terms,
            "df": index.lexicon.df.tolist(),
        }
        f.write(json.dumps(lex, ensure_ascii=False) + "\n")
        for enc in index.encoded:
            rec = {"kind": "encoded", "id": enc.doc_id, "term_ids": enc.term_ids.tolist()}
            f.write(json.dumps(rec) + "\n")
        for mode in index.cached_modes:
            empties = np.flatnonzero(index._emb_empty[mode]).tolist()
            f.write(json.dumps({"kind": "emb_empty", "mode": mode, "positions": empties}) + "\n")
        for pos in range(index.n):
            word = None
            emb: dict = {}
            for mode in index.cached_modes:
                word, emb[mode] = index.cache_row(pos, mode)
            row = {"kind": "neighbors", "id": index.corpus[pos].id, "word": word, "emb": emb}
            f.write(json.dumps(row) + "\n")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise BundleError(message)


def read_bundle_header(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as f:
        line = f.readline()
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise BundleError(f"not a bundle file: {exc.msg}") from exc
    _require(header.get("format") == FORMAT_TAG, "not a duorec bundle")
    _require(header.get("version") == FORMAT_VERSION,
             f"unsupported bundle version {header.get('version')}")
    return header


def load_bundle(path: str | Path) -> DualIndex:
    """Reload a bundle into a query-ready index.

    The TF-IDF matrix is rebuilt deterministically from the encoded
    documents; the embedded matrices are not stored, so fresh embedding-side
    scoring is unavailable and queries are served from the cached lists.
    """
    path = Path(path)
    header: dict | None = None
    docs: list[Document] = []
    lexicon: Lexicon | None = None
    encoded: list[EncodedDocument] = []
    emb_empty_positions: dict[str, list[int]] = {}
    neighbor_rows: list[dict] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BundleError(f"bundle line {lineno}: invalid JSON ({exc.msg})") from exc
            kind = rec.get("kind")
            if kind == "header":
                _require(lineno == 1, "header must be the first record")
                _require(rec.get("format") == FORMAT_TAG, "not a duorec bundle")
                _require(rec.get("version") == FORMAT_VERSION,
                         f"unsupported bundle version {rec.get('version')}")
                header = rec
            elif kind == "document":
                docs.append(Document(
                    id=rec["id"],
                    text=rec["text"],
                    lang=rec["lang"],
                    image_url=rec.get("image_url"),
                    meta=rec.get("meta"),
                ))
            elif kind == "lexicon":
                lexicon = Lexicon(rec["terms"], np.array(rec["df"], dtype=np.int64))
            elif kind == "encoded":
                encoded.append(EncodedDocument(
                    rec["id"], np.array(rec["term_ids"], dtype=np.int64)
                ))
            elif kind == "emb_empty":
                emb_empty_positions[rec["mode"]] = rec["positions"]
            elif kind == "neighbors":
                neighbor_rows.append(rec)
            else:
                raise BundleError(f"bundle line {lineno}: unknown record kind {kind!r}")
    _require(header is not None, "bundle has no header record")
    _require(lexicon is not None, "bundle has no lexicon record")
    corpus = Corpus(docs)
    _require(len(encoded) == corpus.n, "encoded records do not match document count")
    _require(len(neighbor_rows) == corpus.n, "neighbor records do not match document count")

    config = IndexConfig(**header["config"])
    modes = header.get("modes") or [config.mode]
    for mode in modes:
        _require(mode in MODES, f"unknown cached mode {mode!r}")

    y = build_binary_tf(encoded, len(lexicon))
    x = build_tfidf(y)

    def pairs_to_arrays(pairs: list) -> tuple[np.ndarray, np.ndarray]:
        ids = np.array([corpus.position(p[0]) for p in pairs], dtype=np.int64)
        scores = np.array([p[1] for p in pairs], dtype=np.float64)
        return ids, scores

    word_cache: list[tuple[np.ndarray, np.ndarray]] = []
    emb_cache: dict[str, list[tuple[np.ndarray, np.ndarray]]] = {m: [] for m in modes}
    for pos, row in enumerate(neighbor_rows):
        _require(row["id"] == corpus[pos].id, "neighbor rows out of order")
        word_cache.append(pairs_to_arrays(row["word"]))
        emb = row["emb"]
        for mode in modes:
            _require(mode in emb, f"neighbor row missing mode {mode!r}")
            emb_cache[mode].append(pairs_to_arrays(emb[mode]))

    emb_empty = {}
    for mode in modes:
        flags = np.zeros(corpus.n, dtype=bool)
        flags[np.array(emb_empty_positions.get(mode, []), dtype=np.int64)] = True
        emb_empty[mode] = flags

    return DualIndex(
        corpus=corpus,
        lexicon=lexicon,
        encoded=encoded,
        config=config,
        y=y,
        x=x,
        xemb={},
        word_cache=word_cache,
        emb_cache=emb_cache,
        emb_empty=emb_empty,
        hashes=header.get("hashes") or {},
        dim=header.get("dim"),
    )
