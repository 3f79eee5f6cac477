"""Synthetic corpus builders shared by the test suite.

``make_desk_corpus`` produces a bilingual news-like corpus at desk scale:
caption families share a mid-frequency core vocabulary while each member
carries a couple of rare tokens, most families have a parallel family in
the other language covering the same story, content words have exact
cross-language translation vectors, and rare tokens come in cross-language
pairs. ``make_random_corpus`` produces small unstructured corpora for
oracle-equivalence checks.
"""

import numpy as np

from duorec.corpus import Corpus, Document
from duorec.embedding import EmbeddingRegistry


def make_random_corpus(seed):
    """Small random corpus + registry; odd seeds are bilingual."""
    rng = np.random.default_rng(seed)
    bilingual = seed % 2 == 1
    langs = ["en", "fr"] if bilingual else ["xx"]
    n_words = int(rng.integers(30, 260))
    p = int(rng.integers(2, 17))
    n_docs = int(rng.integers(10, 201))
    words_per_lang = {
        lang: [f"w{lang}{i}" for i in range(n_words // len(langs))] for lang in langs
    }
    registry = EmbeddingRegistry.from_dict({
        lang: {w: rng.normal(size=p) for w in words}
        for lang, words in words_per_lang.items()
    })
    docs = []
    for i in range(n_docs):
        lang = langs[int(rng.integers(len(langs)))]
        words = words_per_lang[lang]
        length = int(rng.integers(0, 15))
        tokens = list(rng.choice(words, size=length, replace=True))
        if rng.random() < 0.1:
            tokens.append("zzoutofvocab")  # never has a vector
        docs.append(Document(str(i), " ".join(tokens), lang))
    # guarantee at least one token survives the lexicon filters
    docs[0] = Document("0", words_per_lang[langs[0]][0] + " " + docs[0].text, langs[0])
    docs[1] = Document("1", words_per_lang[langs[0]][0] + " " + docs[1].text, langs[0])
    return Corpus(docs), registry


def make_desk_corpus(n_docs=5000, seed=0, n_concept_pairs=220, p=24,
                     pair_scale=8.0, sibling_gap=1.0, word_noise=0.05,
                     family_mean=14, family_min=6, family_max=40,
                     parallel_rate=0.9, single_rate=0.2,
                     core_lo=4, core_hi=6, core_drop=0.25,
                     rare_lo=2, rare_hi=4, rare_reuse=0.6, rare_max_df=4,
                     concept_skew=0.8):
    rng = np.random.default_rng(seed)
    n_concepts = 2 * n_concept_pairs
    pair_centers = rng.normal(0, 1, (n_concept_pairs, p)) * pair_scale
    concept_vecs = np.empty((n_concepts, p))
    for k in range(n_concept_pairs):
        direction = rng.normal(0, 1, p)
        direction /= np.linalg.norm(direction)
        concept_vecs[2 * k] = pair_centers[k] - direction * (sibling_gap / 2)
        concept_vecs[2 * k + 1] = pair_centers[k] + direction * (sibling_gap / 2)
    tables = {"en": {}, "fr": {}}
    for j in range(n_concepts):
        tables["en"][f"k{j}e"] = concept_vecs[j] + rng.normal(0, word_noise, p)
        tables["fr"][f"k{j}f"] = concept_vecs[j] + rng.normal(0, word_noise, p)

    # rare tokens (names, places) come in cross-language pairs on a far
    # shell; each side is used by a couple of documents of its language
    rare_words = {"en": [], "fr": []}
    rare_uses = {"en": [], "fr": []}

    def new_rare_pair():
        idx = len(rare_words["en"])
        base = rng.normal(0, 1, p) * pair_scale
        base[0] += 80.0
        for lang, suffix in (("en", "e"), ("fr", "f")):
            word = f"r{idx}{suffix}"
            tables[lang][word] = base + rng.normal(0, word_noise, p)
            rare_words[lang].append(word)
            rare_uses[lang].append(int(rng.integers(2, rare_max_df + 1)))
        return idx

    def rare_token(lang):
        pool, uses = rare_words[lang], rare_uses[lang]
        open_ids = [i for i in range(max(0, len(pool) - 400), len(pool)) if uses[i] > 0]
        if open_ids and rng.random() < rare_reuse:
            i = open_ids[int(rng.integers(len(open_ids)))]
        else:
            i = new_rare_pair()
        uses[i] -= 1
        return pool[i]

    concept_w = 1.0 / np.arange(1, n_concepts + 1) ** concept_skew
    concept_w /= concept_w.sum()

    def core_concepts():
        k = int(rng.integers(core_lo, core_hi + 1))
        return rng.choice(n_concepts, size=k, replace=False, p=concept_w)

    def member_text(core, lang):
        suffix = "e" if lang == "en" else "f"
        kept = [c for c in core if rng.random() > core_drop]
        if not kept:
            kept = [core[int(rng.integers(len(core)))]]
        tokens = [f"k{c}{suffix}" for c in kept]
        for _ in range(int(rng.integers(rare_lo, rare_hi + 1))):
            tokens.append(rare_token(lang))
        return " ".join(tokens)

    docs = []
    i = 0
    while i < n_docs:
        lang = "en" if rng.random() < 0.5 else "fr"
        if rng.random() < single_rate:
            docs.append(Document(str(i), member_text(core_concepts(), lang), lang))
            i += 1
            continue
        core = core_concepts()
        size = int(np.clip(int(rng.lognormal(np.log(family_mean), 0.6)),
                           family_min, family_max))
        for _ in range(min(size, n_docs - i)):
            docs.append(Document(str(i), member_text(core, lang), lang))
            i += 1
        if rng.random() < parallel_rate and i < n_docs:
            other = "fr" if lang == "en" else "en"
            for _ in range(min(size, n_docs - i)):
                docs.append(Document(str(i), member_text(core, other), other))
                i += 1
    registry = EmbeddingRegistry.from_dict(tables)
    return Corpus(docs), registry
