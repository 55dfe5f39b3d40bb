import numpy as np
import pytest
import scipy.sparse as sp

import multisage as ms
from multisage.generators import _bernoulli_pairs, _pair_from_linear
from multisage.graph import GraphError


def transitivity(graph: ms.SimpleGraph) -> float:
    """Triangle-count oracle: 3 * triangles / connected triples."""
    n = graph.num_nodes
    rows = np.concatenate([graph.edges[:, 0], graph.edges[:, 1]])
    cols = np.concatenate([graph.edges[:, 1], graph.edges[:, 0]])
    adj = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    closed = (adj @ adj).multiply(adj).sum()  # 6 * triangles
    deg = np.asarray(adj.sum(axis=1)).ravel()
    triples = (deg * (deg - 1)).sum()
    return float(closed / triples) if triples else 0.0


class TestPairEnumeration:
    def test_linear_inversion_matches_brute_force(self):
        for n in (2, 3, 7, 20):
            total = n * (n - 1) // 2
            got = _pair_from_linear(np.arange(total, dtype=np.int64), n)
            want = np.array([(i, j) for i in range(n) for j in range(i + 1, n)])
            assert np.array_equal(got, want)

    def test_bernoulli_extremes(self):
        rng = np.random.default_rng(0)
        assert len(_bernoulli_pairs(10, 0.0, rng)) == 0
        assert len(_bernoulli_pairs(10, 1.0, rng)) == 45


class TestAddRandomLinks:
    def test_rho_zero_is_identity(self):
        g = ms.simple_graph(6, [(0, 1), (2, 3)])
        assert ms.add_random_links(g, 0.0, seed=1) == g

    def test_rho_one_gives_complete_graph(self):
        g = ms.simple_graph(5, [(0, 1)])
        full = ms.add_random_links(g, 1.0, seed=1)
        assert full.num_edges == 10

    def test_edge_count_binomial(self):
        # binomial oracle: mean p*C(n,2), sd sqrt(p(1-p)C(n,2))
        g = ms.simple_graph(100, [])
        p, pairs = 0.5, 100 * 99 // 2
        mean = p * pairs
        sd = np.sqrt(p * (1 - p) * pairs)
        counts = [ms.add_random_links(g, p, seed=s).num_edges for s in range(5)]
        for c in counts:
            assert abs(c - mean) < 3 * sd

    def test_original_edges_preserved(self):
        g = ms.simple_graph(30, [(i, i + 1) for i in range(29)])
        grown = ms.add_random_links(g, 0.1, seed=3)
        assert g.edge_set() <= grown.edge_set()

    def test_seed_determinism(self):
        g = ms.simple_graph(40, [(0, 1)])
        a = ms.add_random_links(g, 0.2, seed=9)
        b = ms.add_random_links(g, 0.2, seed=9)
        assert a == b


class TestWattsStrogatz:
    def test_zero_rewiring_is_ring_lattice(self):
        g = ms.watts_strogatz(10, 4, 0.0, seed=0)
        assert g.num_edges == 20
        want = set()
        for i in range(10):
            for off in (1, 2):
                j = (i + off) % 10
                want.add((min(i, j), max(i, j)))
        assert g.edge_set() == want
        assert (g.degrees() == 4).all()

    def test_edge_count_constant_in_phi(self):
        for phi in (0.0, 0.1, 0.5, 1.0):
            g = ms.watts_strogatz(200, 6, phi, seed=4)
            assert g.num_edges == 200 * 6 // 2

    def test_full_rewiring_kills_clustering(self):
        g = ms.watts_strogatz(10_000, 4, 1.0, seed=2)
        assert transitivity(g) < 0.01

    def test_ring_clustering_is_high(self):
        g = ms.watts_strogatz(500, 4, 0.0, seed=2)
        assert transitivity(g) > 0.3

    def test_seed_determinism(self):
        a = ms.watts_strogatz(100, 4, 0.3, seed=5)
        b = ms.watts_strogatz(100, 4, 0.3, seed=5)
        assert a == b

    def test_validation(self):
        with pytest.raises(GraphError, match="even"):
            ms.watts_strogatz(10, 3, 0.1, seed=0)
        with pytest.raises(GraphError):
            ms.watts_strogatz(4, 4, 0.1, seed=0)


class TestLift:
    def test_ring_lattice_lift(self):
        base = ms.watts_strogatz(12, 2, 0.0, seed=0)
        g = ms.lift_to_single_layer_multiplex(base)
        assert g.num_layers == 1
        assert g.num_inter_edges == 0
        assert g.num_intra_edges == base.num_edges

    def test_flattened_edges_match_base(self):
        base = ms.simple_graph(6, [(0, 3), (1, 2), (4, 5)])
        g = ms.lift_to_single_layer_multiplex(base)
        assert np.array_equal(g.flattened().edges, base.edges)


class TestLargestLayer:
    def test_picks_biggest(self, three_layer_toy):
        layer_sizes = three_layer_toy.layer_sizes
        top = ms.largest_layer(three_layer_toy)
        assert top.num_nodes == max(layer_sizes)

    def test_single_layer_roundtrip(self):
        base = ms.watts_strogatz(20, 4, 0.2, seed=1)
        g = ms.lift_to_single_layer_multiplex(base)
        assert ms.largest_layer(g) == base

    def test_tie_breaks_to_lowest_index(self):
        g = ms.build_graph(
            replicas=[(0, 0), (0, 1), (1, 5), (1, 6)],
            intra_edges=[((0, 0), (0, 1)), ((1, 5), (1, 6))])
        top = ms.largest_layer(g)
        assert top.num_nodes == 2
        # layer 0 wins the tie; its labels are 0 and 1
        assert g.labels[:2] == (0, 1)


class TestCorrelatedMultiplex:
    def test_structure_and_determinism(self):
        g1 = ms.correlated_multiplex(40, 3, edge_noise=0.1,
                                     coupling_fraction=0.7, seed=5)
        g2 = ms.correlated_multiplex(40, 3, edge_noise=0.1,
                                     coupling_fraction=0.7, seed=5)
        assert g1 == g2
        assert g1.num_layers == 3
        assert g1.num_inter_edges > 0

    def test_layer_sizes_respected(self):
        g = ms.correlated_multiplex(50, 3, layer_sizes=[50, 40, 30], seed=2)
        assert g.num_layers == 3
        # sizes are upper bounds: replicas only exist with an intra edge
        assert g.layer_sizes[0] <= 50 and g.layer_sizes[1] <= 40
        assert g.layer_sizes[2] <= 30
