"""duorec: dual-channel document recommendations for corpus exploration.

For any document in a (possibly multilingual) corpus the index returns two
ranked neighbor lists: word neighbors, scored on the document's own TF-IDF
terms, and embedding neighbors, scored after replacing each term with its
closest terms in an aligned word-embedding space. The second channel links
documents that share no words, including documents in different languages.
"""

from .bundle import load_bundle, read_bundle_header, save_bundle
from .corpus import (
    Corpus,
    Document,
    EncodedDocument,
    Lexicon,
    build_lexicon,
    encode_documents,
    load_corpus,
    load_lemma_table,
    tokenize,
)
from .embedding import (
    EmbeddingRegistry,
    MODE_EXPANSION,
    MODE_REPLACEMENT,
    NeighborFunction,
    build_neighbor_function,
    load_embeddings,
    nearest_terms,
)
from .errors import (
    BundleError,
    CacheLimitError,
    CorpusError,
    DuorecError,
    EmbeddingError,
    EmptyQueryError,
    LexiconError,
)
from .graph import (
    ConnectivityReport,
    RecGraph,
    algebraic_connectivity,
    average_distance,
    build_graph,
    connectivity_report,
    ego_percentile,
    in_degree_percentile,
    sweep_reports,
    unconnected_proportion,
)
from .index import (
    DualIndex,
    EmbeddedTermDocMatrix,
    IndexConfig,
    NeighborEntry,
    NeighborList,
    TermDocMatrix,
    build_binary_tf,
    build_dual_index,
    build_embedded_corpus,
    build_embedded_tfidf,
    build_tfidf,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
