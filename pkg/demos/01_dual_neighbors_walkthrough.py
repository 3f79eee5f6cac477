"""Walkthrough: why a document gets two different neighbor lists.

Builds a tiny bilingual corpus of photo-caption-like texts, gives every
content word a vector such that translations and related words sit close
together, and prints the word neighbors (lexical matches) next to the
embedding neighbors (matches after each term is replaced by its closest
embedding-space terms) for a few starting documents.

Run:  python3 demos/01_dual_neighbors_walkthrough.py
"""

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
)

DOCS = [
    ("a1", "grading and bunching carrots in the field", "en"),
    ("a2", "bunching carrots in the field", "en"),
    ("a3", "bunching carrots near the river", "en"),
    ("b1", "roadside display of pumpkins and turnips", "en"),
    ("b2", "pumpkins and turnips on a market stand", "en"),
    ("c1", "children at the fiesta", "en"),
    ("c2", "children dancing at the festival", "en"),
    ("f1", "récolte de carottes dans le champ", "fr"),
    ("f2", "étalage de citrouilles et navets", "fr"),
    ("f3", "enfants à la fête du village", "fr"),
]

# concept -> words that should be mutual nearest neighbors in vector space,
# across forms and languages
CONCEPTS = {
    "carrot": ["carrots", "carottes"],
    "squash": ["pumpkins", "turnips", "citrouilles", "navets"],
    "field": ["field", "champ", "river", "roadside"],
    "party": ["fiesta", "festival", "fête", "celebration"],
    "child": ["children", "enfants"],
    "market": ["display", "market", "stand", "étalage"],
    "work": ["grading", "bunching", "récolte", "dancing"],
}

FR_WORDS = {"carottes", "citrouilles", "navets", "champ", "fête", "enfants",
            "étalage", "récolte", "de", "dans", "le", "et", "à", "la", "du", "village"}


def build_registry(seed=3):
    rng = np.random.default_rng(seed)
    en, fr = {}, {}
    for words in CONCEPTS.values():
        center = rng.normal(size=16) * 6.0
        for word in words:
            vec = center + rng.normal(size=16) * 0.3
            (fr if word in FR_WORDS else en)[word] = vec
    # filler words get their own far-apart positions
    filler = ["and", "in", "the", "of", "a", "on", "near", "at",
              "de", "dans", "le", "et", "à", "la", "du", "village"]
    for word in filler:
        vec = rng.normal(size=16) * 6.0
        (fr if word in FR_WORDS else en)[word] = vec
    return EmbeddingRegistry.from_dict({"en": en, "fr": fr})


def main():
    corpus = Corpus([Document(i, t, l) for i, t, l in DOCS])
    registry = build_registry()
    lexicon = build_lexicon(corpus, registry, min_df=1)
    encoded = encode_documents(corpus, lexicon)
    neighbor_fn = build_neighbor_function(lexicon, registry, m=3)
    config = IndexConfig(m=3, mode="replacement", n_w=3, n_e=3,
                         cache_k=5, positive_only=True)
    index = build_dual_index(corpus, lexicon, encoded, neighbor_fn, config)

    print(f"corpus: {corpus.n} documents, lexicon: {len(lexicon)} terms\n")
    print("A term's closest embedding-space terms (what the second channel")
    print("substitutes before scoring):")
    for term in ("en:carrots", "en:pumpkins", "en:fiesta"):
        tid = lexicon.term_to_id[term]
        neighbors = [lexicon.terms[j] for j in neighbor_fn.neighbors(tid)]
        print(f"  {term:14s} -> {', '.join(neighbors)}")

    for doc_id in ("a1", "c1"):
        doc = corpus.get(doc_id)
        result = index.dual_neighbors(doc_id)
        print(f"\nstarting document [{doc_id}] ({doc.lang}): {doc.text!r}")
        print("  word neighbors (same words):")
        for nid, score in result.word:
            print(f"    {score:6.3f}  [{nid}] {corpus.get(nid).text}")
        print("  embedding neighbors (replaced words):")
        for nid, score in result.embedding:
            print(f"    {score:6.3f}  [{nid}] {corpus.get(nid).text}")

    print("\nNote how the embedding channel reaches documents that share no")
    print("surface words with the query, including the French ones.")


if __name__ == "__main__":
    main()
