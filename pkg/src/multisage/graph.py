"""Immutable multiplex-network data model.

A multiplex network stacks L undirected, unweighted layers. Every node of
the flattened network is a *replica*: one (layer, label) pair. A physical
entity that participates in several layers is represented by one replica per
layer, tied together by inter-layer coupling edges. Intra-layer edges
connect replicas on the same layer.

Couplings obey two structural constraints: a replica may be coupled to at
most one replica on each other layer, and coupled groups are transitively
closed, so every connected component of the coupling graph is a clique or an
isolated replica.

Replica indices are assigned in contiguous per-layer blocks ordered by layer
index. The supra-adjacency matrix is therefore block structured: layer
adjacencies on the diagonal blocks, couplings off the diagonal.

Graphs are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Iterator

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

logger = logging.getLogger(__name__)

VALIDATION_MODES = ("strict", "close", "warn")


class GraphError(ValueError):
    """Violation of the multiplex structural model."""


@dataclass(frozen=True)
class Replica:
    """One (layer, label) vertex of the flattened network."""

    layer: int
    label: Hashable
    index: int


def _order_key(value):
    # Total order over mixed label types: group by class, compare within.
    return (value.__class__.__name__, value)


def _canonical_pairs(pairs: np.ndarray) -> np.ndarray:
    """Return pairs with u < v per row, rows lexicographically sorted."""
    if pairs.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def _pair_keys(pairs: np.ndarray, n: int) -> np.ndarray:
    return pairs[:, 0].astype(np.int64) * n + pairs[:, 1]


def _adjacency(pairs: np.ndarray, n: int) -> sp.csr_matrix:
    """Symmetric 0/1 CSR adjacency from canonical undirected pairs."""
    if len(pairs) == 0:
        return sp.csr_matrix((n, n), dtype=np.int8)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    data = np.ones(len(rows), dtype=np.int8)
    mat = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    mat.sort_indices()
    return mat


@dataclass(frozen=True, eq=False)
class MultiplexGraph:
    """Multiplex network over N replicas in L layer blocks.

    ``intra_pairs`` and ``inter_pairs`` are (M, 2) int64 arrays of global
    replica indices with u < v per row, lexicographically sorted. Instances
    should be created through :func:`build_graph` or the loader/generator
    helpers, which validate the structural constraints.
    """

    layer_sizes: tuple[int, ...]
    labels: tuple[Hashable, ...]
    intra_pairs: np.ndarray
    inter_pairs: np.ndarray

    def __post_init__(self):
        self.intra_pairs.setflags(write=False)
        self.inter_pairs.setflags(write=False)

    # basic shape

    @property
    def num_vertices(self) -> int:
        return len(self.labels)

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes)

    @property
    def num_intra_edges(self) -> int:
        return len(self.intra_pairs)

    @property
    def num_inter_edges(self) -> int:
        return len(self.inter_pairs)

    @cached_property
    def layer_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.layer_sizes)])

    @cached_property
    def layer_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_layers), self.layer_sizes)

    def layer_members(self, layer: int) -> range:
        """Global index range of the replicas on one layer."""
        return range(self.layer_offsets[layer], self.layer_offsets[layer + 1])

    # replica lookup

    @cached_property
    def _replica_index(self) -> dict:
        lo = self.layer_of
        return {(int(lo[i]), self.labels[i]): i for i in range(self.num_vertices)}

    def index_of(self, layer: int, label: Hashable) -> int:
        try:
            return self._replica_index[(layer, label)]
        except KeyError:
            raise GraphError(f"unknown replica {label!r} on layer {layer}") from None

    def replica(self, index: int) -> Replica:
        return Replica(int(self.layer_of[index]), self.labels[index], int(index))

    def replicas(self) -> Iterator[Replica]:
        for i in range(self.num_vertices):
            yield self.replica(i)

    # adjacency structures

    @cached_property
    def intra_matrix(self) -> sp.csr_matrix:
        return _adjacency(self.intra_pairs, self.num_vertices)

    @cached_property
    def inter_matrix(self) -> sp.csr_matrix:
        return _adjacency(self.inter_pairs, self.num_vertices)

    def supra_adjacency(self) -> sp.csr_matrix:
        """N x N symmetric 0/1 matrix: layer blocks on the diagonal, couplings off it."""
        mat = (self.intra_matrix + self.inter_matrix).tocsr()
        mat.sort_indices()
        return mat

    def intra_neighbors(self, n: int) -> np.ndarray:
        """Sorted same-layer neighbor indices of replica n."""
        m = self.intra_matrix
        return m.indices[m.indptr[n]:m.indptr[n + 1]]

    def inter_neighbors(self, n: int) -> np.ndarray:
        """Sorted coupled-replica indices of replica n (all on other layers)."""
        m = self.inter_matrix
        return m.indices[m.indptr[n]:m.indptr[n + 1]]

    def neighbors(self, n: int) -> np.ndarray:
        """Sorted union of intra- and inter-layer neighbors."""
        return np.sort(np.concatenate([self.intra_neighbors(n), self.inter_neighbors(n)]))

    @cached_property
    def intra_degrees(self) -> np.ndarray:
        return np.diff(self.intra_matrix.indptr)

    @cached_property
    def inter_degrees(self) -> np.ndarray:
        return np.diff(self.inter_matrix.indptr)

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.intra_degrees + self.inter_degrees

    def flattened(self) -> "FlattenedView":
        return FlattenedView(self)

    # derived graphs

    def _induced(self, keep: np.ndarray, new_layer_count: int,
                 layer_map: np.ndarray) -> "MultiplexGraph":
        """Subgraph on the kept vertices; layers renumbered via layer_map."""
        old_indices = np.flatnonzero(keep)
        remap = np.full(self.num_vertices, -1, dtype=np.int64)
        remap[old_indices] = np.arange(len(old_indices))
        sizes = np.zeros(new_layer_count, dtype=np.int64)
        np.add.at(sizes, layer_map[self.layer_of[old_indices]], 1)

        def filter_pairs(pairs):
            if len(pairs) == 0:
                return np.empty((0, 2), dtype=np.int64)
            mask = keep[pairs[:, 0]] & keep[pairs[:, 1]]
            return remap[pairs[mask]]

        return MultiplexGraph(
            layer_sizes=tuple(int(s) for s in sizes),
            labels=tuple(self.labels[i] for i in old_indices),
            intra_pairs=_canonical_pairs(filter_pairs(self.intra_pairs)),
            inter_pairs=_canonical_pairs(filter_pairs(self.inter_pairs)),
        )

    def largest_connected_component(self) -> "MultiplexGraph":
        """Connected subgraph (under all edges) of maximal size.

        Ties go to the component containing the smallest global index.
        Kept replicas stay in index order, so layer blocks are preserved;
        layers left empty are dropped and the rest renumbered.
        """
        n_comp, comp = csgraph.connected_components(self.supra_adjacency(), directed=False)
        sizes = np.bincount(comp, minlength=n_comp)
        best_size = sizes.max()
        candidates = np.flatnonzero(sizes == best_size)
        first_seen = np.full(n_comp, self.num_vertices, dtype=np.int64)
        np.minimum.at(first_seen, comp, np.arange(self.num_vertices))
        chosen = candidates[np.argmin(first_seen[candidates])]
        keep = comp == chosen
        kept_per_layer = np.bincount(self.layer_of[keep], minlength=self.num_layers)
        surviving = np.flatnonzero(kept_per_layer > 0)
        layer_map = np.full(self.num_layers, -1, dtype=np.int64)
        layer_map[surviving] = np.arange(len(surviving))
        return self._induced(keep, len(surviving), layer_map)

    def subnetwork(self, layers: Iterable[int]) -> "MultiplexGraph":
        """Restriction to a subset of layers.

        Keeps every replica of the selected layers (isolated ones included;
        no connected-component re-extraction), the intra edges within them,
        and the inter edges between them. Selected layers are renumbered
        0..len-1 in their original relative order.
        """
        selected = sorted(set(int(l) for l in layers))
        if not selected:
            raise GraphError("layer subset must be nonempty")
        if selected[0] < 0 or selected[-1] >= self.num_layers:
            raise GraphError(f"layer subset {selected} out of range for {self.num_layers} layers")
        layer_map = np.full(self.num_layers, -1, dtype=np.int64)
        layer_map[selected] = np.arange(len(selected))
        keep = np.isin(self.layer_of, selected)
        return self._induced(keep, len(selected), layer_map)

    def without_edges(self, pairs: np.ndarray) -> "MultiplexGraph":
        """Copy of the graph with the given edges removed; replicas unchanged.

        Every pair must be an existing edge (given in either endpoint order)
        and must not repeat.
        """
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if len(pairs) == 0:
            return self
        canon = np.sort(pairs, axis=1)
        keys = _pair_keys(canon, self.num_vertices)
        if len(np.unique(keys)) != len(keys):
            raise GraphError("duplicate pair in edge-removal list")
        intra_keys = _pair_keys(self.intra_pairs, self.num_vertices)
        inter_keys = _pair_keys(self.inter_pairs, self.num_vertices)
        drop_intra = np.isin(intra_keys, keys)
        drop_inter = np.isin(inter_keys, keys)
        if drop_intra.sum() + drop_inter.sum() != len(keys):
            raise GraphError("edge-removal list contains a pair that is not an edge")
        return MultiplexGraph(
            layer_sizes=self.layer_sizes,
            labels=self.labels,
            intra_pairs=self.intra_pairs[~drop_intra],
            inter_pairs=self.inter_pairs[~drop_inter],
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiplexGraph):
            return NotImplemented
        return (self.layer_sizes == other.layer_sizes
                and self.labels == other.labels
                and np.array_equal(self.intra_pairs, other.intra_pairs)
                and np.array_equal(self.inter_pairs, other.inter_pairs))

    def __repr__(self) -> str:
        return (f"MultiplexGraph(N={self.num_vertices}, L={self.num_layers}, "
                f"intra={self.num_intra_edges}, inter={self.num_inter_edges})")


class FlattenedView:
    """Type-erased view of a multiplex: one vertex set, one edge set.

    Exposes exactly the union connectivity, with no intra/inter distinction.
    """

    def __init__(self, graph: MultiplexGraph):
        self._graph = graph

    @property
    def num_vertices(self) -> int:
        return self._graph.num_vertices

    @cached_property
    def edges(self) -> np.ndarray:
        return _canonical_pairs(
            np.vstack([self._graph.intra_pairs, self._graph.inter_pairs]))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        return self._graph.supra_adjacency()

    def neighbors(self, n: int) -> np.ndarray:
        m = self.adjacency
        return m.indices[m.indptr[n]:m.indptr[n + 1]]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    @cached_property
    def edge_keys(self) -> np.ndarray:
        """Sorted u*N+v keys of all edges, for vectorized membership tests."""
        return np.sort(_pair_keys(self.edges, self.num_vertices))

    def has_edges(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Elementwise edge-membership test for index arrays (either order)."""
        a = np.minimum(u, v).astype(np.int64)
        b = np.maximum(u, v).astype(np.int64)
        keys = a * self.num_vertices + b
        pos = np.searchsorted(self.edge_keys, keys)
        pos = np.minimum(pos, len(self.edge_keys) - 1) if len(self.edge_keys) else pos
        if len(self.edge_keys) == 0:
            return np.zeros(len(keys), dtype=bool)
        return self.edge_keys[pos] == keys


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def build_graph(replicas, intra_edges=(), inter_edges=(), validation: str = "strict") -> MultiplexGraph:
    """Validate and assemble a multiplex graph.

    Parameters
    ----------
    replicas : iterable of (layer_id, label)
        Declared replicas. Layer ids may be any sortable values; they are
        mapped to dense indices 0..L-1 in sorted order, and labels are
        sorted within each layer, so index assignment is reproducible.
    intra_edges, inter_edges : iterables of ((layer_id, label), (layer_id, label))
        Undirected edges between declared replicas.
    validation : "strict" | "close" | "warn"
        Handling of the coupling constraints (one partner per other layer,
        components closed into cliques). ``strict`` raises on violation;
        ``close`` transitively closes coupling components into cliques;
        ``warn`` logs violations and keeps the graph as given.

    Raises
    ------
    GraphError
        On dangling replica references, self-loops, duplicate edges, edges
        whose endpoints contradict their declared kind, or (strict/close)
        coupling-constraint violations.
    """
    if validation not in VALIDATION_MODES:
        raise GraphError(f"unknown validation mode {validation!r}")

    declared = list(dict.fromkeys((layer, label) for layer, label in replicas))
    if not declared:
        raise GraphError("a graph needs at least one replica")

    layer_ids = sorted({layer for layer, _ in declared}, key=_order_key)
    layer_index = {lid: i for i, lid in enumerate(layer_ids)}
    per_layer: list[list] = [[] for _ in layer_ids]
    for lid, label in declared:
        per_layer[layer_index[lid]].append(label)
    for bucket in per_layer:
        bucket.sort(key=_order_key)

    index: dict = {}
    labels: list = []
    for li, bucket in enumerate(per_layer):
        for label in bucket:
            index[(layer_ids[li], label)] = len(labels)
            labels.append(label)
    layer_sizes = tuple(len(b) for b in per_layer)
    n = len(labels)
    layer_of = np.repeat(np.arange(len(layer_sizes)), layer_sizes)

    def resolve(edge_list, kind):
        out = []
        seen = set()
        for a, b in edge_list:
            try:
                u, v = index[tuple(a)], index[tuple(b)]
            except KeyError:
                missing = tuple(a) if tuple(a) not in index else tuple(b)
                raise GraphError(f"{kind} edge references undeclared replica {missing}") from None
            if u == v:
                raise GraphError(f"self-loop on replica {tuple(a)}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"duplicate {kind} edge {tuple(a)} - {tuple(b)}")
            seen.add(key)
            same_layer = layer_of[u] == layer_of[v]
            if kind == "intra" and not same_layer:
                raise GraphError(f"intra edge {tuple(a)} - {tuple(b)} spans two layers")
            if kind == "inter" and same_layer:
                raise GraphError(f"inter edge {tuple(a)} - {tuple(b)} stays on one layer")
            out.append(key)
        return np.array(out, dtype=np.int64).reshape(-1, 2)

    intra = resolve(intra_edges, "intra")
    inter = resolve(inter_edges, "inter")
    inter = _apply_coupling_policy(inter, layer_of, labels, n, validation)

    return MultiplexGraph(
        layer_sizes=layer_sizes,
        labels=tuple(labels),
        intra_pairs=_canonical_pairs(intra),
        inter_pairs=_canonical_pairs(inter),
    )


def _apply_coupling_policy(inter: np.ndarray, layer_of: np.ndarray, labels,
                           n: int, validation: str) -> np.ndarray:
    """Enforce (or close, or report) the coupling-component constraints."""
    if len(inter) == 0:
        return inter
    uf = _UnionFind(n)
    for u, v in inter:
        uf.union(int(u), int(v))
    components: dict[int, list[int]] = {}
    touched = np.unique(inter)
    for node in touched:
        components.setdefault(uf.find(int(node)), []).append(int(node))
    edge_count: dict[int, int] = {}
    for u, _ in inter:
        root = uf.find(int(u))
        edge_count[root] = edge_count.get(root, 0) + 1

    existing = {(int(u), int(v)) for u, v in inter}
    added: list[tuple[int, int]] = []
    for root, members in components.items():
        comp_layers = layer_of[members]
        if len(np.unique(comp_layers)) != len(members):
            dupe = int(np.flatnonzero(np.bincount(comp_layers) > 1)[0])
            msg = (f"coupling component {[labels[m] for m in members]} has two "
                   f"replicas on layer {dupe}")
            if validation == "warn":
                logger.warning("%s (kept)", msg)
                continue
            raise GraphError(msg)
        size = len(members)
        expected = size * (size - 1) // 2
        if edge_count[root] == expected:
            continue
        if validation == "strict":
            raise GraphError(
                f"coupling component {[labels[m] for m in members]} is not a clique "
                f"({edge_count[root]} of {expected} edges)")
        if validation == "warn":
            logger.warning(
                "coupling component %s is not a clique (%d of %d edges, kept)",
                [labels[m] for m in members], edge_count[root], expected)
            continue
        for u, v in itertools.combinations(sorted(members), 2):
            if (u, v) not in existing:
                added.append((u, v))
    if added:
        inter = np.vstack([inter, np.array(added, dtype=np.int64)])
    return inter
