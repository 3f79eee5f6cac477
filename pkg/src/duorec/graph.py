"""Recommendation graph construction and connectivity metrics.

Every document points at its top word neighbors and top embedding neighbors;
the resulting directed typed graph is summarized by five metrics: algebraic
connectivity of the undirected simple graph, the proportion of ordered pairs
with no directed path, the average directed distance over connected pairs,
the 90th-percentile in-degree, and the 10th-percentile count of nodes
reachable within three hops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.sparse.linalg import eigsh

from .errors import DuorecError
from .index import SOURCE_EMBEDDING, SOURCE_WORD, DualIndex

# exact all-sources BFS below this node count; uniform source sampling above
EXACT_BFS_THRESHOLD = 50_000
DEFAULT_SAMPLE_SOURCES = 2_000
DENSE_EIG_THRESHOLD = 2_000
EIG_TOL = 1e-9

_BFS_CHUNK = 512


class RecGraph:
    """Directed typed recommendation edges over corpus positions."""

    def __init__(self, n: int, edges_by_type: dict[str, np.ndarray]):
        self.n = n
        self.edges_by_type = {}
        for etype, edges in edges_by_type.items():
            edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
            if edges.size and (edges[:, 0] == edges[:, 1]).any():
                raise DuorecError("recommendation graph may not contain self-loops")
            self.edges_by_type[etype] = edges

    @property
    def edge_count(self) -> int:
        return sum(e.shape[0] for e in self.edges_by_type.values())

    def edges(self) -> list[tuple[int, int, str]]:
        out = []
        for etype in sorted(self.edges_by_type):
            for src, dst in self.edges_by_type[etype]:
                out.append((int(src), int(dst), etype))
        return out

    @cached_property
    def directed(self) -> sp.csr_matrix:
        """Simple directed adjacency: duplicate (src, dst) pairs collapse."""
        if self.edge_count == 0:
            return sp.csr_matrix((self.n, self.n), dtype=np.float64)
        all_edges = np.vstack([e for e in self.edges_by_type.values() if e.size])
        mat = sp.csr_matrix(
            (np.ones(all_edges.shape[0]), (all_edges[:, 0], all_edges[:, 1])),
            shape=(self.n, self.n),
        )
        mat.data[:] = 1.0  # duplicates summed by construction; collapse them
        return mat

    @cached_property
    def undirected(self) -> sp.csr_matrix:
        a = self.directed
        u = a + a.T
        u.data[:] = 1.0
        return u

    @cached_property
    def in_degrees(self) -> np.ndarray:
        return np.asarray(self.directed.sum(axis=0)).ravel().astype(np.int64)

    @cached_property
    def out_degrees(self) -> np.ndarray:
        return np.asarray(self.directed.sum(axis=1)).ravel().astype(np.int64)

    def out_neighbors(self, pos: int) -> np.ndarray:
        a = self.directed
        return a.indices[a.indptr[pos]: a.indptr[pos + 1]]


def build_graph(
    index: DualIndex, n_w: int, n_e: int, mode: str | None = None
) -> RecGraph:
    """Edges from every document to its top n_w word and n_e embedding neighbors.

    Documents whose query row is empty on a channel simply contribute fewer
    edges. Requires the index cache to cover max(n_w, n_e).
    """
    word_src: list[int] = []
    word_dst: list[np.ndarray] = []
    emb_src: list[int] = []
    emb_dst: list[np.ndarray] = []
    mode = mode or index.config.mode
    if max(n_w, n_e) > index.cache_k:
        raise DuorecError(
            f"graph needs {max(n_w, n_e)} cached neighbors but the index "
            f"caches only {index.cache_k}"
        )
    for pos in range(index.n):
        if n_w > 0:
            ids = index._word_cache[pos][0][:n_w]
            word_src.extend([pos] * ids.size)
            word_dst.append(ids)
        if n_e > 0:
            ids = index._emb_cache[mode][pos][0][:n_e]
            emb_src.extend([pos] * ids.size)
            emb_dst.append(ids)
    edges: dict[str, np.ndarray] = {}
    if n_w > 0:
        dst = np.concatenate(word_dst) if word_dst else np.empty(0, dtype=np.int64)
        edges[SOURCE_WORD] = np.column_stack([np.array(word_src, dtype=np.int64), dst])
    if n_e > 0:
        dst = np.concatenate(emb_dst) if emb_dst else np.empty(0, dtype=np.int64)
        edges[SOURCE_EMBEDDING] = np.column_stack([np.array(emb_src, dtype=np.int64), dst])
    return RecGraph(index.n, edges)


def _lambda2_of(adj: sp.csr_matrix, tol: float = EIG_TOL) -> float:
    """Second-smallest eigenvalue of the unnormalized Laplacian of ``adj``."""
    n = adj.shape[0]
    if n < 2:
        return 0.0
    degrees = np.asarray(adj.sum(axis=1)).ravel()
    lap = sp.diags(degrees) - adj
    if n < DENSE_EIG_THRESHOLD:
        vals = np.linalg.eigvalsh(lap.toarray())
        return float(max(vals[1], 0.0))
    # shift-invert just below zero keeps the factorization nonsingular while
    # targeting the two smallest eigenvalues
    vals = eigsh(lap.tocsc(), k=2, sigma=-0.01, which="LM", tol=tol,
                 return_eigenvectors=False)
    return float(max(np.sort(vals)[1], 0.0))


def algebraic_connectivity(graph: RecGraph, tol: float = EIG_TOL) -> float:
    """Fiedler value of the symmetrized simple graph; exactly 0 when disconnected."""
    if graph.n < 2:
        raise DuorecError("algebraic connectivity needs at least 2 nodes")
    n_comp, _ = connected_components(graph.undirected, directed=False)
    if n_comp > 1:
        return 0.0
    return _lambda2_of(graph.undirected, tol)


def largest_component_lambda2(graph: RecGraph, tol: float = EIG_TOL) -> float:
    """Fiedler value restricted to the largest undirected component."""
    n_comp, labels = connected_components(graph.undirected, directed=False)
    if n_comp == 1:
        return _lambda2_of(graph.undirected, tol)
    sizes = np.bincount(labels)
    keep = np.flatnonzero(labels == int(np.argmax(sizes)))
    if keep.size < 2:
        return 0.0
    sub = graph.undirected[np.ix_(keep, keep)].tocsr()
    return _lambda2_of(sub, tol)


def _pick_sources(n: int, exact_threshold: int, sample_size: int, seed: int) -> tuple[np.ndarray, bool]:
    if n <= exact_threshold:
        return np.arange(n), False
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=min(sample_size, n), replace=False)), True


def _reach_stats(
    adj: sp.csr_matrix, sources: np.ndarray
) -> tuple[int, int, float]:
    """(connected ordered pairs, total ordered pairs, distance sum) over sources."""
    n = adj.shape[0]
    connected = 0
    dist_sum = 0.0
    for start in range(0, sources.size, _BFS_CHUNK):
        chunk = sources[start: start + _BFS_CHUNK]
        d = dijkstra(adj, directed=True, unweighted=True, indices=chunk)
        reach = np.isfinite(d) & (d > 0)
        connected += int(reach.sum())
        dist_sum += float(d[reach].sum())
    return connected, int(sources.size) * (n - 1), dist_sum


def unconnected_proportion(
    graph: RecGraph,
    exact_threshold: int = EXACT_BFS_THRESHOLD,
    sample_size: int = DEFAULT_SAMPLE_SOURCES,
    seed: int = 0,
) -> float:
    """Share of ordered pairs (i, j), i != j, with no directed path i -> j."""
    if graph.n < 2:
        raise DuorecError("unconnected proportion needs at least 2 nodes")
    sources, _ = _pick_sources(graph.n, exact_threshold, sample_size, seed)
    connected, total, _ = _reach_stats(graph.directed, sources)
    return (total - connected) / total


def average_distance(
    graph: RecGraph,
    exact_threshold: int = EXACT_BFS_THRESHOLD,
    sample_size: int = DEFAULT_SAMPLE_SOURCES,
    seed: int = 0,
) -> float | None:
    """Mean directed shortest-path length over connected ordered pairs.

    Returns None when no ordered pair is connected.
    """
    sources, _ = _pick_sources(graph.n, exact_threshold, sample_size, seed)
    connected, _, dist_sum = _reach_stats(graph.directed, sources)
    if connected == 0:
        return None
    return dist_sum / connected


def _nearest_rank(values: np.ndarray, q: float) -> int:
    if not 0 < q <= 1:
        raise DuorecError(f"percentile fraction must be in (0, 1], got {q}")
    ordered = np.sort(values)
    rank = max(1, math.ceil(q * ordered.size))
    return int(ordered[rank - 1])


def in_degree_percentile(graph: RecGraph, q: float = 0.9) -> int:
    """Nearest-rank percentile of simple-graph in-degrees."""
    if graph.n < 1:
        raise DuorecError("in-degree percentile needs at least 1 node")
    return _nearest_rank(graph.in_degrees, q)


def ego_counts(
    graph: RecGraph,
    radius: int = 3,
    sources: np.ndarray | None = None,
) -> np.ndarray:
    """Distinct other nodes reachable within ``radius`` directed hops, per source."""
    if sources is None:
        sources = np.arange(graph.n)
    counts = np.empty(sources.size, dtype=np.int64)
    for start in range(0, sources.size, _BFS_CHUNK):
        chunk = sources[start: start + _BFS_CHUNK]
        d = dijkstra(graph.directed, directed=True, unweighted=True,
                     indices=chunk, limit=float(radius))
        reach = np.isfinite(d) & (d > 0)
        counts[start: start + chunk.size] = reach.sum(axis=1)
    return counts


def ego_percentile(
    graph: RecGraph,
    radius: int = 3,
    q: float = 0.1,
    exact_threshold: int = EXACT_BFS_THRESHOLD,
    sample_size: int = DEFAULT_SAMPLE_SOURCES,
    seed: int = 0,
) -> int:
    """Nearest-rank percentile of the radius-hop ego counts."""
    if graph.n < 1:
        raise DuorecError("ego percentile needs at least 1 node")
    sources, _ = _pick_sources(graph.n, exact_threshold, sample_size, seed)
    return _nearest_rank(ego_counts(graph, radius, sources), q)


@dataclass(frozen=True)
class ConnectivityReport:
    """All five metrics for one (n_w, n_e, mode) configuration."""

    n_w: int
    n_e: int
    mode: str
    lambda2: float
    lambda2_lcc: float
    unconnected: float
    avg_distance: float | None
    d90_in: int
    ego3_10: int
    sampled: bool
    n: int

    def as_dict(self) -> dict:
        return {
            "nw": self.n_w,
            "ne": self.n_e,
            "mode": self.mode,
            "lambda2": self.lambda2,
            "lambda2_lcc": self.lambda2_lcc,
            "unconnected": self.unconnected,
            "dist": self.avg_distance,
            "d90_in": self.d90_in,
            "ego3_10": self.ego3_10,
            "sampled": self.sampled,
            "n": self.n,
        }


def connectivity_report(
    index: DualIndex,
    n_w: int,
    n_e: int,
    mode: str | None = None,
    exact_threshold: int = EXACT_BFS_THRESHOLD,
    sample_size: int = DEFAULT_SAMPLE_SOURCES,
    seed: int = 0,
) -> ConnectivityReport:
    """Build the graph for one configuration and compute all five metrics.

    BFS-derived metrics share one pass over the sources. Sampling (only
    above ``exact_threshold`` nodes) is flagged in the report.
    """
    mode = mode or index.config.mode
    graph = build_graph(index, n_w, n_e, mode)
    sources, sampled = _pick_sources(graph.n, exact_threshold, sample_size, seed)
    connected, total, dist_sum = _reach_stats(graph.directed, sources)
    return ConnectivityReport(
        n_w=n_w,
        n_e=n_e,
        mode=mode,
        lambda2=algebraic_connectivity(graph),
        lambda2_lcc=largest_component_lambda2(graph),
        unconnected=(total - connected) / total,
        avg_distance=(dist_sum / connected) if connected else None,
        d90_in=in_degree_percentile(graph, 0.9),
        ego3_10=_nearest_rank(ego_counts(graph, 3, sources), 0.1),
        sampled=sampled,
        n=graph.n,
    )


def sweep_reports(
    index: DualIndex,
    pairs: list[tuple[int, int]],
    modes: list[str],
    **kwargs,
) -> list[ConnectivityReport]:
    """Reports for a grid of (n_w, n_e) pairs in each requested mode."""
    out = []
    for mode in modes:
        for n_w, n_e in pairs:
            out.append(connectivity_report(index, n_w, n_e, mode, **kwargs))
    return out
