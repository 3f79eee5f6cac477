"""Batch entry points: build a bundle, dump neighbors, compute metrics, serve.

Exit codes: 0 success, 1 user error (bad flags, unreadable input, unknown
id), 2 internal error. Build options may come from a key=value config file;
explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

from .bundle import load_bundle, read_bundle_header, save_bundle
from .corpus import build_lexicon, encode_documents, load_corpus, load_lemma_table, tokenize, LANG_SEP
from .embedding import EmbeddingRegistry, MODES, build_neighbor_function
from .errors import DuorecError, EmptyQueryError
from .graph import build_graph, sweep_reports
from .index import IndexConfig, build_dual_index

DEFAULT_SWEEP = "12,0;11,1;10,2;9,3;8,4;7,5;6,6"

METRIC_COLUMNS = ["nw", "ne", "mode", "lambda2", "unconnected", "dist", "d90_in", "ego3_10", "sampled"]

_BUILD_DEFAULTS = {
    "format": None,  # inferred from the corpus suffix when absent
    "default_lang": "en",
    "min_df": 2,
    "max_df_ratio": 1.0,
    "m": 15,
    "mode": "replacement",
    "nw": 10,
    "ne": 2,
    "cache_k": None,  # max(nw, ne, 12)
    "positive_only": False,
    "metric": "euclidean",
}


class UserError(DuorecError):
    """Raised for problems the user can fix; exits with status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UserError(message)


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_lang_paths(pairs: list[str], flag: str) -> dict[str, Path]:
    out: dict[str, Path] = {}
    for pair in pairs:
        lang, sep, path = pair.partition("=")
        if not sep or not lang or not path:
            raise UserError(f"{flag} expects lang=path, got {pair!r}")
        out[lang.strip().lower()] = Path(path)
    return out


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UserError(f"expected a boolean, got {raw!r}")


def _read_config_file(path: Path) -> dict[str, str]:
    if not path.exists():
        raise UserError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UserError(f"{path}:{lineno}: expected key=value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _infer_format(path: Path, explicit: str | None) -> str:
    if explicit:
        return explicit
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    raise UserError(
        f"cannot infer corpus format from {path.name!r}; pass --format csv|jsonl"
    )


def _merge_build_options(args) -> dict:
    merged: dict = dict(_BUILD_DEFAULTS)
    file_values = _read_config_file(Path(args.config)) if args.config else {}
    casts = {
        "min_df": int, "max_df_ratio": float, "m": int, "nw": int, "ne": int,
        "cache_k": int, "positive_only": _parse_bool,
    }
    for key, raw in file_values.items():
        if key in ("corpus", "out"):
            merged[key] = raw
        elif key in ("embeddings", "lemma"):
            merged[key] = [p.strip() for p in raw.split(",") if p.strip()]
        elif key in merged:
            merged[key] = casts.get(key, str)(raw)
        else:
            raise UserError(f"unknown config key {key!r}")
    for key in (*_BUILD_DEFAULTS, "corpus", "out"):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    for key in ("embeddings", "lemma"):
        value = getattr(args, key, None)
        if value:
            merged[key] = value
    if not merged.get("corpus"):
        raise UserError("--corpus is required")
    if not merged.get("out"):
        raise UserError("--out is required")
    if not merged.get("embeddings"):
        raise UserError("at least one --embeddings lang=path is required")
    if merged["cache_k"] is None:
        merged["cache_k"] = max(merged["nw"], merged["ne"], 12)
    return merged


def cmd_build(args) -> int:
    opts = _merge_build_options(args)
    corpus_path = Path(opts["corpus"])
    if not corpus_path.exists():
        raise UserError(f"corpus file not found: {corpus_path}")
    fmt = _infer_format(corpus_path, opts["format"])
    embedding_paths = _parse_lang_paths(opts["embeddings"], "--embeddings")
    lemma_paths = _parse_lang_paths(opts.get("lemma") or [], "--lemma")
    for lang, path in {**embedding_paths, **lemma_paths}.items():
        if not path.exists():
            raise UserError(f"file for language {lang!r} not found: {path}")
    out_path = Path(opts["out"])

    params = {k: opts[k] for k in _BUILD_DEFAULTS}
    params["format"] = fmt
    hashes = {
        "corpus": _sha256_file(corpus_path),
        "embeddings": {lang: _sha256_file(p) for lang, p in sorted(embedding_paths.items())},
        "lemmas": {lang: _sha256_file(p) for lang, p in sorted(lemma_paths.items())},
        "params": hashlib.sha256(json.dumps(params, sort_keys=True).encode()).hexdigest(),
    }
    if out_path.exists() and not args.force:
        try:
            existing = read_bundle_header(out_path)
        except DuorecError:
            existing = None
        if existing and existing.get("hashes") == hashes:
            print(f"bundle {out_path} is up to date (inputs unchanged); use --force to rebuild")
            return 0

    started = time.monotonic()
    corpus = load_corpus(corpus_path, fmt, default_lang=opts["default_lang"])
    missing = sorted(set(corpus.languages) - set(embedding_paths))
    if missing:
        raise UserError(
            "no embedding file given for language(s): " + ", ".join(missing)
        )
    lemma_tables = {lang: load_lemma_table(p) for lang, p in lemma_paths.items()}

    # restrict embedding loads to words that actually occur in the corpus
    vocab_by_lang: dict[str, set[str]] = {lang: set() for lang in embedding_paths}
    for doc in corpus:
        for tagged in tokenize(doc.text, doc.lang, lemma_tables.get(doc.lang)):
            lang, _, word = tagged.partition(LANG_SEP)
            vocab_by_lang.setdefault(lang, set()).add(word)
    registry = EmbeddingRegistry()
    for lang, path in embedding_paths.items():
        registry.load(lang, path, restrict_to=vocab_by_lang.get(lang, set()))

    lexicon = build_lexicon(
        corpus, registry,
        min_df=opts["min_df"], max_df_ratio=opts["max_df_ratio"],
        lemma_tables=lemma_tables,
    )
    encoded = encode_documents(corpus, lexicon, lemma_tables)
    neighbor_fn = build_neighbor_function(
        lexicon, registry, m=opts["m"], mode=opts["mode"], metric=opts["metric"]
    )
    config = IndexConfig(
        m=opts["m"], mode=opts["mode"], n_w=opts["nw"], n_e=opts["ne"],
        cache_k=opts["cache_k"], positive_only=opts["positive_only"],
        metric=opts["metric"],
    )
    index = build_dual_index(
        corpus, lexicon, encoded, neighbor_fn, config,
        hashes=hashes, dim=registry.dim,
    )
    save_bundle(index, out_path)
    elapsed = time.monotonic() - started
    print(f"bundle written to {out_path}")
    print(
        f"documents: {corpus.n} | lexicon: {len(lexicon)} | dim: {registry.dim} | "
        f"empty documents: {index.empty_document_count} | build time: {elapsed:.1f}s"
    )
    return 0


def _neighbor_row(index, doc_id: str, n_w: int, n_e: int, mode: str) -> dict:
    try:
        result = index.dual_neighbors(doc_id, n_w, n_e, mode)
    except EmptyQueryError:
        return {"id": doc_id, "word": [], "emb": [], "empty_query": True}
    return {
        "id": doc_id,
        "word": [[d, s] for d, s in result.word],
        "emb": [[d, s] for d, s in result.embedding],
    }


def cmd_neighbors(args) -> int:
    index = load_bundle(args.bundle)
    mode = args.mode or index.config.mode
    n_w = index.config.n_w if args.nw is None else args.nw
    n_e = index.config.n_e if args.ne is None else args.ne
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        if args.all:
            header = {
                "m": index.config.m, "mode": mode, "metric": index.config.metric,
                "lexicon_hash": index.lexicon.content_hash(),
                "nw": n_w, "ne": n_e, "cache_k": index.cache_k,
            }
            out.write(json.dumps(header) + "\n")
            for doc in index.corpus:
                out.write(json.dumps(_neighbor_row(index, doc.id, n_w, n_e, mode)) + "\n")
        else:
            if args.id not in index.corpus:
                raise UserError(f"unknown document id {args.id!r}")
            out.write(json.dumps(_neighbor_row(index, args.id, n_w, n_e, mode)) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def parse_sweep(raw: str) -> list[tuple[int, int]]:
    pairs: list[tuple[int, int]] = []
    for piece in raw.split(";"):
        piece = piece.strip()
        if not piece:
            continue
        parts = piece.split(",")
        if len(parts) != 2:
            raise UserError(f"malformed sweep entry {piece!r}; expected 'nw,ne'")
        try:
            n_w, n_e = int(parts[0]), int(parts[1])
        except ValueError:
            raise UserError(f"malformed sweep entry {piece!r}; expected integers") from None
        if n_w < 0 or n_e < 0 or n_w + n_e < 1:
            raise UserError(f"sweep entry {piece!r} needs nw, ne >= 0 and nw + ne >= 1")
        pairs.append((n_w, n_e))
    if not pairs:
        raise UserError("empty sweep")
    return pairs


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _report_rows(reports) -> list[list[str]]:
    rows = []
    for rep in reports:
        d = rep.as_dict()
        rows.append([_format_cell(d[c]) for c in METRIC_COLUMNS])
    return rows


def _print_table(reports, out) -> None:
    rows = []
    for rep in reports:
        d = rep.as_dict()
        cells = []
        for col in METRIC_COLUMNS:
            value = d[col]
            if col == "lambda2" and value == 0.0:
                cells.append("·")  # disconnected
            elif col in ("lambda2",) and isinstance(value, float):
                cells.append(f"{value:.4f}")
            elif col == "unconnected":
                cells.append(f"{100 * value:.1f}%")
            elif col == "dist":
                cells.append("" if value is None else f"{value:.2f}")
            else:
                cells.append(_format_cell(value))
        rows.append(cells)
    widths = [max(len(METRIC_COLUMNS[i]), *(len(r[i]) for r in rows)) for i in range(len(METRIC_COLUMNS))]
    out.write("  ".join(c.rjust(w) for c, w in zip(METRIC_COLUMNS, widths)) + "\n")
    for r in rows:
        out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n")


def cmd_metrics(args) -> int:
    index = load_bundle(args.bundle)
    pairs = parse_sweep(args.sweep)
    if args.mode == "both":
        modes = list(MODES)
    elif args.mode in MODES:
        modes = [args.mode]
    else:
        raise UserError(f"--mode must be one of {MODES + ('both',)}")
    limit = max(max(p) for p in pairs)
    if limit > index.cache_k:
        raise UserError(
            f"sweep needs {limit} cached neighbors but the bundle caches "
            f"{index.cache_k}; rebuild with a larger --cache-k"
        )
    reports = sweep_reports(index, pairs, modes)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        if args.format == "table":
            _print_table(reports, out)
        else:
            writer = csv.writer(out)
            writer.writerow(METRIC_COLUMNS)
            writer.writerows(_report_rows(reports))
    finally:
        if args.out:
            out.close()
    return 0


def cmd_export_edges(args) -> int:
    index = load_bundle(args.bundle)
    mode = args.mode or index.config.mode
    n_w = index.config.n_w if args.nw is None else args.nw
    n_e = index.config.n_e if args.ne is None else args.ne
    graph = build_graph(index, n_w, n_e, mode)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for src, dst, etype in graph.edges():
            out.write(f"{index.corpus[src].id}\t{index.corpus[dst].id}\t{etype}\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    header = read_bundle_header(args.bundle)
    index = load_bundle(args.bundle)
    app = create_app(index, built_at=header.get("built_at"), ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="duorec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build an index bundle from a corpus and vector files")
    p.add_argument("--corpus", help="CSV or JSONL document file")
    p.add_argument("--format", choices=["csv", "jsonl"])
    p.add_argument("--default-lang", dest="default_lang")
    p.add_argument("--embeddings", action="append", metavar="LANG=PATH")
    p.add_argument("--lemma", action="append", metavar="LANG=PATH")
    p.add_argument("--min-df", dest="min_df", type=int)
    p.add_argument("--max-df-ratio", dest="max_df_ratio", type=float)
    p.add_argument("--m", type=int, help="neighbors per term in the embedding space")
    p.add_argument("--mode", choices=list(MODES))
    p.add_argument("--nw", type=int, help="default word neighbors per query")
    p.add_argument("--ne", type=int, help="default embedding neighbors per query")
    p.add_argument("--cache-k", dest="cache_k", type=int)
    p.add_argument("--positive-only", dest="positive_only", action="store_const", const=True)
    p.add_argument("--metric", choices=["euclidean", "cosine"])
    p.add_argument("--out", help="bundle output path")
    p.add_argument("--config", help="key=value defaults file; flags win")
    p.add_argument("--force", action="store_true", help="rebuild even when input hashes match")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("neighbors", help="emit cached neighbor lists as JSONL")
    p.add_argument("--bundle", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--id", help="single document id")
    g.add_argument("--all", action="store_true", help="every document, preceded by a config header row")
    p.add_argument("--nw", type=int)
    p.add_argument("--ne", type=int)
    p.add_argument("--mode", choices=list(MODES))
    p.add_argument("--out")
    p.set_defaults(func=cmd_neighbors)

    p = sub.add_parser("metrics", help="connectivity metric grid over an (nw, ne) sweep")
    p.add_argument("--bundle", required=True)
    p.add_argument("--sweep", default=DEFAULT_SWEEP, help="semicolon-separated nw,ne pairs")
    p.add_argument("--mode", default="both", help="replacement, expansion, or both")
    p.add_argument("--format", choices=["csv", "table"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("export-edges", help="dump the recommendation graph as TSV")
    p.add_argument("--bundle", required=True)
    p.add_argument("--nw", type=int)
    p.add_argument("--ne", type=int)
    p.add_argument("--mode", choices=list(MODES))
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_edges)

    p = sub.add_parser("serve", help="serve a bundle over HTTP")
    p.add_argument("--bundle", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--ui-dir", dest="ui_dir", help="static explorer assets to mount at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DuorecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
