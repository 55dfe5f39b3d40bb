"""Seeded synthetic graphs: ER unions, small-world lattices, multiplex lifts.

All generators draw from ``numpy.random.default_rng(seed)`` and are
single-threaded, so a seed pins the exact edge set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphError, MultiplexGraph, _canonical_pairs, build_graph


@dataclass(frozen=True, eq=False)
class SimpleGraph:
    """Plain undirected graph over nodes 0..num_nodes-1.

    ``edges`` is an (M, 2) int64 array with u < v per row, lexicographically
    sorted and duplicate-free.
    """

    num_nodes: int
    edges: np.ndarray

    def __post_init__(self):
        self.edges.setflags(write=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_nodes, dtype=np.int64)
        np.add.at(deg, self.edges.ravel(), 1)
        return deg

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimpleGraph):
            return NotImplemented
        return self.num_nodes == other.num_nodes and np.array_equal(self.edges, other.edges)


def simple_graph(num_nodes: int, edges) -> SimpleGraph:
    """Build a SimpleGraph from any iterable of index pairs."""
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64).reshape(-1, 2)
    if len(arr) and (arr.min() < 0 or arr.max() >= num_nodes):
        raise GraphError("edge endpoint out of range")
    if len(arr) and (arr[:, 0] == arr[:, 1]).any():
        raise GraphError("self-loop in edge list")
    canon = _canonical_pairs(arr)
    if len(canon) > 1 and (np.diff(canon[:, 0] * num_nodes + canon[:, 1]) == 0).any():
        raise GraphError("duplicate edge in edge list")
    return SimpleGraph(num_nodes=num_nodes, edges=canon)


def _pair_from_linear(k: np.ndarray, n: int) -> np.ndarray:
    """Invert the row-major enumeration of i<j pairs over n nodes."""
    # Row i starts at offset i*n - i*(i+3)/2 - ... easier via the triangular count:
    # pairs before row i: T(i) = i*(2n - i - 1) / 2. Solve T(i) <= k for the
    # largest i via the quadratic formula, then correct for float rounding.
    kk = k.astype(np.float64)
    i = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * kk)) / 2).astype(np.int64)
    starts = i * (2 * n - i - 1) // 2
    over = starts > k
    i[over] -= 1
    starts = i * (2 * n - i - 1) // 2
    under = (i + 1) * (2 * n - i - 2) // 2 <= k
    i[under] += 1
    starts = i * (2 * n - i - 1) // 2
    j = k - starts + i + 1
    return np.column_stack([i, j])


def _bernoulli_pairs(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Each of the C(n,2) pairs independently with probability p.

    Uses geometric skips over the linearized pair space, so the cost scales
    with the number of sampled pairs rather than with C(n,2).
    """
    total = n * (n - 1) // 2
    if p <= 0.0 or total == 0:
        return np.empty((0, 2), dtype=np.int64)
    if p >= 1.0:
        return _pair_from_linear(np.arange(total, dtype=np.int64), n)
    positions = []
    cursor = -1
    batch = max(64, int(1.2 * p * total) + 16)
    while cursor < total:
        gaps = rng.geometric(p, size=batch)
        steps = np.cumsum(gaps) + cursor
        positions.append(steps)
        cursor = int(steps[-1])
    hits = np.concatenate(positions)
    hits = hits[hits < total]
    return _pair_from_linear(hits, n)


def add_random_links(graph: SimpleGraph, rho: float, seed) -> SimpleGraph:
    """Union of a graph with an ER sample of connection probability rho.

    Every node pair is drawn independently with probability ``rho``;
    existing edges are always preserved, so only previously nonadjacent
    pairs can gain a link. ``rho=0`` returns the graph unchanged, ``rho=1``
    the complete graph.
    """
    if not 0.0 <= rho <= 1.0:
        raise GraphError(f"rho={rho} outside [0, 1]")
    rng = np.random.default_rng(seed)
    sampled = _bernoulli_pairs(graph.num_nodes, rho, rng)
    if len(sampled) == 0:
        return graph
    n = graph.num_nodes
    keys = np.union1d(graph.edges[:, 0] * n + graph.edges[:, 1],
                      sampled[:, 0] * n + sampled[:, 1])
    return SimpleGraph(num_nodes=n,
                       edges=np.column_stack([keys // n, keys % n]).astype(np.int64))


def watts_strogatz(num_nodes: int, degree: int, rewire_probability: float, seed) -> SimpleGraph:
    """Small-world graph: ring lattice with per-edge random rewiring.

    Starts from a ring where every node connects to ``degree`` neighbors
    (degree/2 on each side). Each clockwise lattice edge is then rewired
    with probability ``rewire_probability``: the far endpoint is replaced by
    a uniformly random node, redrawing self and duplicate targets. The edge
    count stays exactly num_nodes * degree / 2, so density never depends on
    the rewiring probability.
    """
    if degree % 2 != 0:
        raise GraphError("degree must be even")
    if not 2 <= degree < num_nodes:
        raise GraphError("need num_nodes > degree >= 2")
    if not 0.0 <= rewire_probability <= 1.0:
        raise GraphError(f"rewire probability {rewire_probability} outside [0, 1]")

    rng = np.random.default_rng(seed)
    adjacency: set[tuple[int, int]] = set()
    node_degree = np.zeros(num_nodes, dtype=np.int64)

    def key(a, b):
        return (a, b) if a < b else (b, a)

    for offset in range(1, degree // 2 + 1):
        for u in range(num_nodes):
            v = (u + offset) % num_nodes
            adjacency.add(key(u, v))
            node_degree[u] += 1
            node_degree[v] += 1

    for offset in range(1, degree // 2 + 1):
        for u in range(num_nodes):
            v = (u + offset) % num_nodes
            if key(u, v) not in adjacency:
                continue  # already rewired away by an earlier pass
            if rng.random() >= rewire_probability:
                continue
            if node_degree[u] >= num_nodes - 1:
                continue  # no admissible new target
            while True:
                w = int(rng.integers(0, num_nodes))
                if w != u and key(u, w) not in adjacency:
                    break
            adjacency.remove(key(u, v))
            adjacency.add(key(u, w))
            node_degree[v] -= 1
            node_degree[w] += 1

    return simple_graph(num_nodes, sorted(adjacency))


def lift_to_single_layer_multiplex(graph: SimpleGraph) -> MultiplexGraph:
    """Wrap a plain graph as a one-layer multiplex with no couplings."""
    return MultiplexGraph(
        layer_sizes=(graph.num_nodes,),
        labels=tuple(range(graph.num_nodes)),
        intra_pairs=graph.edges.copy(),
        inter_pairs=np.empty((0, 2), dtype=np.int64),
    )


def largest_layer(graph: MultiplexGraph) -> SimpleGraph:
    """Extract the layer with the most replicas (ties: lowest layer index).

    Replicas are relabeled 0..N_layer-1 in index order; couplings are
    dropped.
    """
    sizes = np.asarray(graph.layer_sizes)
    layer = int(np.argmax(sizes))  # argmax takes the first maximum
    start = graph.layer_offsets[layer]
    stop = graph.layer_offsets[layer + 1]
    pairs = graph.intra_pairs
    mask = (pairs[:, 0] >= start) & (pairs[:, 0] < stop)
    return SimpleGraph(num_nodes=int(sizes[layer]),
                       edges=(pairs[mask] - start).astype(np.int64))


def correlated_multiplex(num_entities: int, num_layers: int,
                         layer_sizes=None, degree: int = 4,
                         edge_noise: float = 0.1,
                         coupling_fraction: float = 1.0, seed=0) -> MultiplexGraph:
    """Multiplex whose layers share one latent entity ordering.

    Entities sit on a circle. Each layer samples a subset of them (sizes
    from ``layer_sizes``, default all) and wires every member to its
    ``degree`` nearest members in entity order, then rewires a fraction
    ``edge_noise`` of those edges to random member pairs. Layers are
    therefore correlated (nearby entities connect everywhere) without being
    copies of each other. A fraction ``coupling_fraction`` of the labels
    present on several layers keep their coupling cliques; the rest stay
    uncoupled. Useful as a structured testbed where couplings are
    predictable from intra-layer context.
    """
    rng = np.random.default_rng(seed)
    if layer_sizes is None:
        layer_sizes = [num_entities] * num_layers
    if len(layer_sizes) != num_layers:
        raise GraphError("layer_sizes length must equal num_layers")
    if max(layer_sizes) > num_entities:
        raise GraphError("layer size exceeds entity count")
    if degree % 2 != 0 or degree < 2:
        raise GraphError("degree must be even and >= 2")

    replicas = []
    intra = []
    for layer in range(num_layers):
        members = np.sort(rng.choice(num_entities, size=layer_sizes[layer],
                                     replace=False))
        size = len(members)
        edges: set[tuple[int, int]] = set()
        for pos in range(size):
            for offset in range(1, degree // 2 + 1):
                u = int(members[pos])
                v = int(members[(pos + offset) % size])
                if u != v:
                    edges.add((min(u, v), max(u, v)))
        rewired: set[tuple[int, int]] = set()
        for u, v in sorted(edges):
            if rng.random() < edge_noise:
                for _ in range(64):
                    a, b = rng.choice(members, size=2, replace=False)
                    a, b = int(min(a, b)), int(max(a, b))
                    if (a, b) not in rewired and (a, b) not in edges:
                        rewired.add((a, b))
                        break
            else:
                rewired.add((u, v))
        for u, v in sorted(rewired):
            intra.append(((layer, u), (layer, v)))
            replicas.append((layer, u))
            replicas.append((layer, v))

    by_label: dict[int, list[int]] = {}
    for layer, label in replicas:
        by_label.setdefault(label, [])
        if layer not in by_label[label]:
            by_label[label].append(layer)
    inter = []
    for label in sorted(by_label):
        layers = sorted(by_label[label])
        if len(layers) < 2 or rng.random() >= coupling_fraction:
            continue
        for i in range(len(layers)):
            for j in range(i + 1, len(layers)):
                inter.append(((layers[i], label), (layers[j], label)))

    return build_graph(replicas, intra_edges=intra, inter_edges=inter, validation="strict")
