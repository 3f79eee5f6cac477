"""Connectivity sweep: how the word/embedding edge split shapes the graph.

Generates a synthetic bilingual corpus (news-like caption families with a
parallel family in the other language), builds the index once, and prints
the five connectivity metrics for every (n_w, n_e) split of twelve
recommendations, in replacement and expansion mode.

Things to look for in the output:
  * the word-only graph (12, 0) cannot connect the two languages, so more
    than half of the ordered pairs are unreachable;
  * a single embedding edge (11, 1) collapses that number;
  * replacement mode stays better connected than expansion mode.

Run:  python3 demos/02_connectivity_sweep.py [n_docs]
"""

import sys
import time

import numpy as np

from duorec import (
    Corpus,
    Document,
    EmbeddingRegistry,
    IndexConfig,
    build_dual_index,
    build_lexicon,
    build_neighbor_function,
    encode_documents,
    sweep_reports,
)

SWEEP = [(12, 0), (11, 1), (10, 2), (9, 3), (8, 4), (7, 5), (6, 6)]


def make_corpus(n_docs=1200, seed=0, n_concepts=300, p=16):
    """Caption families sharing a core vocabulary, mirrored across languages."""
    rng = np.random.default_rng(seed)
    concept_vecs = rng.normal(size=(n_concepts, p)) * 8.0
    tables = {"en": {}, "fr": {}}
    for j in range(n_concepts):
        tables["en"][f"k{j}e"] = concept_vecs[j] + rng.normal(0, 0.05, p)
        tables["fr"][f"k{j}f"] = concept_vecs[j] + rng.normal(0, 0.05, p)

    def member(core, lang):
        suffix = "e" if lang == "en" else "f"
        kept = [c for c in core if rng.random() > 0.25] or [core[0]]
        return " ".join(f"k{c}{suffix}" for c in kept)

    docs = []
    i = 0
    while i < n_docs:
        core = rng.choice(n_concepts, size=5, replace=False)
        lang = "en" if rng.random() < 0.5 else "fr"
        other = "fr" if lang == "en" else "en"
        size = int(rng.integers(4, 14))
        for _ in range(min(size, n_docs - i)):
            docs.append(Document(str(i), member(core, lang), lang))
            i += 1
        for _ in range(min(size, n_docs - i)):
            docs.append(Document(str(i), member(core, other), other))
            i += 1
    return Corpus(docs), EmbeddingRegistry.from_dict(tables)


def main():
    n_docs = int(sys.argv[1]) if len(sys.argv) > 1 else 1200
    started = time.monotonic()
    corpus, registry = make_corpus(n_docs)
    lexicon = build_lexicon(corpus, registry, min_df=2)
    encoded = encode_documents(corpus, lexicon)
    neighbor_fn = build_neighbor_function(lexicon, registry, m=1)
    config = IndexConfig(m=1, mode="replacement", n_w=10, n_e=2,
                         cache_k=12, positive_only=True)
    index = build_dual_index(corpus, lexicon, encoded, neighbor_fn, config)
    print(f"built index over {corpus.n} documents, |lexicon| = {len(lexicon)} "
          f"({time.monotonic() - started:.1f}s)\n")

    reports = sweep_reports(index, SWEEP, ["replacement", "expansion"])
    header = f"{'nw':>3} {'ne':>3} {'mode':>11} {'lambda2':>8} {'unconn':>7} {'dist':>6} {'d90':>4} {'ego3':>5}"
    print(header)
    print("-" * len(header))
    for r in reports:
        lam = "·" if r.lambda2 == 0.0 else f"{r.lambda2:.4f}"
        dist = "" if r.avg_distance is None else f"{r.avg_distance:.2f}"
        print(f"{r.n_w:>3} {r.n_e:>3} {r.mode:>11} {lam:>8} "
              f"{100 * r.unconnected:>6.1f}% {dist:>6} {r.d90_in:>4} {r.ego3_10:>5}")
    print(f"\ntotal time {time.monotonic() - started:.1f}s")


if __name__ == "__main__":
    main()
