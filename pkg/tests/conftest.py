import numpy as np
import pytest

import multisage as ms


@pytest.fixture
def two_layer_toy():
    """Two layers {a, b}, labels {1, 2}, one intra edge per layer, full coupling."""
    return ms.build_graph(
        replicas=[("a", 1), ("a", 2), ("b", 1), ("b", 2)],
        intra_edges=[(("a", 1), ("a", 2)), (("b", 1), ("b", 2))],
        inter_edges=[(("a", 1), ("b", 1)), (("a", 2), ("b", 2))])


@pytest.fixture
def three_layer_toy():
    """Three layers over labels 0..3 with partial coupling and a spare label."""
    layers = {0: [(0, 1), (1, 2), (2, 3)],
              1: [(0, 1), (1, 3)],
              2: [(0, 2), (2, 3)]}
    replicas = [(l, n) for l, edges in layers.items() for u, v in edges for n in (u, v)]
    intra = [((l, u), (l, v)) for l, edges in layers.items() for u, v in edges]
    inter = [((0, 0), (1, 0)), ((1, 0), (2, 0)), ((0, 2), (2, 2))]
    return ms.build_graph(replicas, intra, inter, validation="close")


def random_multiplex(rng, num_layers=3, nodes_per_layer=8, edge_prob=0.3,
                     coupling_prob=0.5):
    """Random small multiplex; couplings derived from shared labels."""
    replicas, intra = [], []
    present = {}
    for layer in range(num_layers):
        labels = sorted(rng.choice(nodes_per_layer * 2, size=nodes_per_layer,
                                   replace=False).tolist())
        edges = []
        for i in range(len(labels)):
            for j in range(i + 1, len(labels)):
                if rng.random() < edge_prob:
                    edges.append(((layer, labels[i]), (layer, labels[j])))
        if not edges:  # guarantee at least one edge so the layer exists
            edges.append(((layer, labels[0]), (layer, labels[1])))
        intra.extend(edges)
        for (a, b) in edges:
            present.setdefault(a[1], set()).add(layer)
            present.setdefault(b[1], set()).add(layer)
            replicas.extend([a, b])
    inter = []
    for label, layers in sorted(present.items()):
        layers = sorted(layers)
        if len(layers) >= 2 and rng.random() < coupling_prob:
            for i in range(len(layers)):
                for j in range(i + 1, len(layers)):
                    inter.append(((layers[i], label), (layers[j], label)))
    return ms.build_graph(replicas, intra, inter, validation="strict")


@pytest.fixture
def random_multiplex_factory():
    return random_multiplex


def ring_graph(n):
    return ms.simple_graph(n, [(i, (i + 1) % n) for i in range(n)])


def coupled_ring_multiplex(n=60, num_layers=2):
    """Identical ring on every layer, every label fully coupled."""
    replicas, intra, inter = [], [], []
    for layer in range(num_layers):
        replicas += [(layer, i) for i in range(n)]
        intra += [((layer, i), (layer, (i + 1) % n)) for i in range(n)]
    for i in range(n):
        for layer in range(num_layers - 1):
            inter.append(((layer, i), (layer + 1, i)))
    return ms.build_graph(replicas, intra, inter, validation="close")
