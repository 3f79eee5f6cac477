"""Read-only HTTP JSON API over a loaded index bundle.

The bundle is held fully in memory and never mutated, so any number of
concurrent readers see identical responses; the only mutable state is the
per-configuration metrics memo, guarded as a compute-once cell. Rebuilds go
through the CLI followed by a restart.
"""

from __future__ import annotations

import threading
import uuid
from collections import Counter
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .corpus import Document, tokenize
from .embedding import MODES
from .errors import CacheLimitError, EmptyQueryError
from .graph import connectivity_report
from .index import DualIndex

SNIPPET_LIMIT = 280


def make_snippet(text: str, limit: int = SNIPPET_LIMIT) -> str:
    """Truncate to ``limit`` characters on a word boundary."""
    if len(text) <= limit:
        return text
    head = text[: limit - 1]
    cut = head.rfind(" ")
    if cut > 0:
        head = head[:cut]
    return head.rstrip() + "…"


def _doc_payload(doc: Document) -> dict:
    payload: dict = {"id": doc.id, "text": doc.text, "lang": doc.lang}
    if doc.image_url:
        payload["image_url"] = doc.image_url
    if doc.meta:
        payload["meta"] = doc.meta
    return payload


def _entry_payload(doc: Document, score: float) -> dict:
    payload: dict = {
        "id": doc.id,
        "score": score,
        "snippet": make_snippet(doc.text),
        "lang": doc.lang,
    }
    if doc.image_url:
        payload["image_url"] = doc.image_url
    return payload


def _error(status: int, code: str, detail: str | None = None) -> JSONResponse:
    body: dict = {"error": code}
    if detail:
        body["detail"] = detail
    return JSONResponse(status_code=status, content=body)


def _parse_count(raw: str | None, default: int, name: str) -> int:
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer") from None
    if value < 0:
        raise ValueError(f"{name} must be >= 0")
    return value


class _MetricsMemo:
    """Compute-once cache of connectivity reports, keyed by (nw, ne, mode).

    Small graphs are computed inline; beyond ``sync_threshold`` nodes the
    first request starts a background computation and returns a poll token.
    """

    def __init__(self, index: DualIndex, sync_threshold: int):
        self._index = index
        self._sync_threshold = sync_threshold
        self._lock = threading.Lock()
        self._jobs: dict[tuple[int, int, str], dict] = {}

    def get(self, n_w: int, n_e: int, mode: str) -> tuple[int, dict]:
        key = (n_w, n_e, mode)
        with self._lock:
            job = self._jobs.get(key)
            if job is None:
                if self._index.n <= self._sync_threshold:
                    job = {"status": "running", "token": uuid.uuid4().hex}
                    self._jobs[key] = job
                    run_inline = True
                else:
                    job = {"status": "pending", "token": uuid.uuid4().hex}
                    self._jobs[key] = job
                    worker = threading.Thread(
                        target=self._compute, args=(key,), daemon=True
                    )
                    worker.start()
                    run_inline = False
            else:
                run_inline = False
        if job["status"] == "done":
            return 200, job["report"]
        if job["status"] == "error":
            return 500, {"error": "metrics_failed", "detail": job["detail"]}
        if run_inline:
            self._compute(key)
            return self.get(n_w, n_e, mode)
        return 202, {"status": "pending", "token": job["token"]}

    def _compute(self, key: tuple[int, int, str]) -> None:
        n_w, n_e, mode = key
        try:
            report = connectivity_report(self._index, n_w, n_e, mode)
            payload = report.as_dict()
        except Exception as exc:  # surfaced as a 500 with the message
            with self._lock:
                self._jobs[key].update(status="error", detail=str(exc))
            return
        with self._lock:
            self._jobs[key].update(status="done", report=payload)


def create_app(
    index: DualIndex,
    built_at: float | None = None,
    ui_dir: str | Path | None = None,
    metrics_sync_threshold: int = 2_000,
) -> FastAPI:
    """Wire the API routes around one immutable index."""
    app = FastAPI(title="duorec", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=r"https?://(localhost|127\.0\.0\.1)(:\d+)?",
        allow_methods=["GET"],
        allow_headers=["*"],
    )
    config_echo = index.config.as_dict()
    lang_counts = Counter(d.lang for d in index.corpus)
    default_lang = lang_counts.most_common(1)[0][0]
    memo = _MetricsMemo(index, metrics_sync_threshold)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/config")
    def config():
        return {
            "config": config_echo,
            "n": index.n,
            "lexicon_size": len(index.lexicon),
            "dim": index.dim,
            "languages": index.corpus.languages,
            "default_lang": default_lang,
            "modes": index.cached_modes,
            "built_at": built_at,
        }

    @app.get("/documents/{doc_id}")
    def document(doc_id: str):
        doc = index.corpus.get(doc_id)
        if doc is None:
            return _error(404, "not_found")
        return {"config": config_echo, "document": _doc_payload(doc)}

    @app.get("/documents/{doc_id}/neighbors")
    def neighbors(doc_id: str, nw: str | None = None, ne: str | None = None):
        doc = index.corpus.get(doc_id)
        if doc is None:
            return _error(404, "not_found")
        try:
            n_w = _parse_count(nw, index.config.n_w, "nw")
            n_e = _parse_count(ne, index.config.n_e, "ne")
        except ValueError as exc:
            return _error(422, "invalid_parameter", str(exc))
        try:
            result = index.dual_neighbors(doc_id, n_w, n_e)
        except CacheLimitError as exc:
            return _error(422, "cache_exceeded", str(exc))
        except EmptyQueryError:
            return _error(409, "empty_query")
        def enrich(pairs):
            return [
                _entry_payload(index.corpus.get(nid), score) for nid, score in pairs
            ]
        return {
            "config": config_echo,
            "id": doc_id,
            "word": enrich(result.word),
            "emb": enrich(result.embedding),
        }

    @app.get("/metrics")
    def metrics(nw: str | None = None, ne: str | None = None, mode: str | None = None):
        try:
            n_w = _parse_count(nw, index.config.n_w, "nw")
            n_e = _parse_count(ne, index.config.n_e, "ne")
        except ValueError as exc:
            return _error(422, "invalid_parameter", str(exc))
        mode = mode or index.config.mode
        if mode not in MODES:
            return _error(422, "invalid_parameter", f"mode must be one of {MODES}")
        if mode not in index.cached_modes:
            return _error(422, "invalid_parameter", f"bundle has no cache for mode {mode!r}")
        if max(n_w, n_e) > index.cache_k:
            return _error(
                422, "cache_exceeded",
                f"requested {max(n_w, n_e)} neighbors but cache_k is {index.cache_k}; rebuild",
            )
        if n_w + n_e < 1:
            return _error(422, "invalid_parameter", "nw + ne must be >= 1")
        status, payload = memo.get(n_w, n_e, mode)
        if status == 200:
            return {"config": config_echo, "report": payload}
        return JSONResponse(status_code=status, content=payload)

    @app.get("/search")
    def search(q: str = "", lang: str | None = None, n: str | None = None):
        if not q.strip():
            return _error(422, "empty_query", "q must be non-empty")
        try:
            top_n = _parse_count(n, 10, "n")
        except ValueError as exc:
            return _error(422, "invalid_parameter", str(exc))
        search_lang = (lang or default_lang).strip().lower()
        tokens = tokenize(q, search_lang)
        try:
            ranked = index.rank_query_terms(tokens, top_n)
        except EmptyQueryError:
            return _error(422, "no_lexicon_terms",
                          "no query token is in the lexicon for that language")
        results = [
            _entry_payload(index.corpus.get(doc_id), score) for doc_id, score in ranked
        ]
        return {"config": config_echo, "query": q, "lang": search_lang, "results": results}

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
