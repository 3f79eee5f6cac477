import io

import numpy as np
import pytest

from duorec.corpus import Corpus, Document, build_lexicon, encode_documents, load_corpus
from duorec.embedding import EmbeddingRegistry, build_neighbor_function
from duorec.index import IndexConfig, build_dual_index


BILINGUAL_CSV = """id,text,lang,image_url,photographer
a,Grading and bunching carrots in the field,en,http://img/a.jpg,lee
b,Bunching carrots in the field,en,,
c,Roadside display of pumpkins and turnips,en,,
d,Le tapis rouge du festival,fr,,
e,Sur le tapis rouge,fr,,
f,Children at the fiesta,en,,
"""


@pytest.fixture
def bilingual_corpus() -> Corpus:
    return load_corpus(io.StringIO(BILINGUAL_CSV), "csv")


@pytest.fixture
def bilingual_registry() -> EmbeddingRegistry:
    rng = np.random.default_rng(7)
    en = ["grading", "and", "bunching", "carrots", "in", "the", "field",
          "roadside", "display", "of", "pumpkins", "turnips", "children",
          "at", "fiesta"]
    fr = ["le", "tapis", "rouge", "du", "festival", "sur"]
    return EmbeddingRegistry.from_dict({
        "en": {w: rng.normal(size=8) for w in en},
        "fr": {w: rng.normal(size=8) for w in fr},
    })


@pytest.fixture
def bilingual_index(bilingual_corpus, bilingual_registry):
    lexicon = build_lexicon(bilingual_corpus, bilingual_registry, min_df=1)
    encoded = encode_documents(bilingual_corpus, lexicon)
    nf = build_neighbor_function(lexicon, bilingual_registry, m=3)
    config = IndexConfig(m=3, mode="replacement", n_w=2, n_e=2, cache_k=4)
    return build_dual_index(bilingual_corpus, lexicon, encoded, nf, config)


def make_translation_fixture():
    """Three en/fr document pairs whose words are mutual translation neighbors.

    Each pair shares content-word concepts; same-language documents share a
    filler word so the word channel has within-language candidates.
    """
    pairs = [
        ("school children classroom", "ecole enfants classe"),
        ("harvest carrots field", "recolte carottes champ"),
        ("festival music dance", "feste musique danse"),
    ]
    docs = []
    for k, (en_text, fr_text) in enumerate(pairs):
        docs.append(Document(f"en{k}", en_text + " common", "en"))
        docs.append(Document(f"fr{k}", fr_text + " commun", "fr"))
    corpus = Corpus(docs)
    rng = np.random.default_rng(11)
    translation = {
        "school": "ecole", "children": "enfants", "classroom": "classe",
        "harvest": "recolte", "carrots": "carottes", "field": "champ",
        "festival": "feste", "music": "musique", "dance": "danse",
    }
    # concept vectors: translation pairs sit 0.01 apart, concepts 5+ apart
    en_table, fr_table = {}, {}
    concept_positions = rng.normal(size=(len(translation) + 2, 12)) * 5.0
    for i, ew in enumerate(sorted(translation)):
        en_table[ew] = concept_positions[i]
        fr_table[translation[ew]] = concept_positions[i] + 0.01
    en_table["common"] = concept_positions[-1]
    fr_table["commun"] = concept_positions[-2]
    registry = EmbeddingRegistry.from_dict({"en": en_table, "fr": fr_table})
    return corpus, registry


@pytest.fixture
def translation_fixture():
    return make_translation_fixture()
