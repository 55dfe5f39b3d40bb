import numpy as np
import pytest

import multisage as ms
from multisage.graph import GraphError
from multisage.sampling import NegativeSamplerConfig, draw_negatives, sample_negatives


def star_multiplex(n=6):
    """Single layer: node 0 adjacent to everyone else."""
    return ms.lift_to_single_layer_multiplex(
        ms.simple_graph(n, [(0, i) for i in range(1, n)]))


class TestUniformSampling:
    def test_never_hits_self_or_neighbors(self):
        g = star_multiplex(8)
        cfg = NegativeSamplerConfig(q=4, seed=0)
        rng = np.random.default_rng(1)
        leaves = np.arange(1, 8)
        draws = draw_negatives(g, leaves, cfg, rng)
        for anchor, row in zip(leaves, draws):
            forbidden = {0, int(anchor)}
            assert not forbidden & set(int(x) for x in row)

    def test_reproducible_list(self):
        g = star_multiplex(10)
        cfg = NegativeSamplerConfig(q=5, seed=77)
        a = sample_negatives(3, g, cfg)
        b = sample_negatives(3, g, cfg)
        assert np.array_equal(a, b)

    def test_star_center_falls_back_with_warning(self, caplog):
        g = star_multiplex(6)
        cfg = NegativeSamplerConfig(q=3, seed=5)
        with caplog.at_level("WARNING"):
            row = sample_negatives(0, g, cfg)
        assert len(row) == 3
        assert all(int(x) != 0 for x in row)  # uniform over everyone else
        assert any("falling back" in rec.getMessage() for rec in caplog.records)

    def test_counts_roughly_uniform_over_support(self):
        # path graph: anchor 0 has neighbor 1, support = {2, 3, 4}
        g = ms.lift_to_single_layer_multiplex(
            ms.simple_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)]))
        cfg = NegativeSamplerConfig(q=1, seed=0)
        rng = np.random.default_rng(0)
        draws = draw_negatives(g, np.zeros(30_000, dtype=np.int64), cfg, rng).ravel()
        counts = np.bincount(draws, minlength=5)
        assert counts[0] == counts[1] == 0
        expected = 10_000
        sd = np.sqrt(30_000 * (1 / 3) * (2 / 3))
        assert np.all(np.abs(counts[2:] - expected) < 4 * sd)


class TestDegreePowerSampling:
    def test_draw_frequencies_match_weights(self):
        # two degree classes: hub of degree 4, leaves of degree 1, plus a
        # detached pair. Anchor is one leaf; support excludes the hub.
        g = ms.lift_to_single_layer_multiplex(
            ms.simple_graph(7, [(0, 1), (0, 2), (0, 3), (0, 4), (5, 6)]))
        anchor = 1  # neighbor of hub 0 only
        cfg = NegativeSamplerConfig(q=1, distribution="degree_power", seed=0)
        rng = np.random.default_rng(42)
        n_draws = 100_000
        draws = draw_negatives(g, np.full(n_draws, anchor), cfg, rng).ravel()
        counts = np.bincount(draws, minlength=7)
        assert counts[0] == 0 and counts[anchor] == 0
        weights = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0])  # deg^0.75 of degree-1 nodes
        probs = weights / weights.sum()
        for node in (2, 3, 4, 5, 6):
            mean = n_draws * probs[node]
            sd = np.sqrt(n_draws * probs[node] * (1 - probs[node]))
            assert abs(counts[node] - mean) < 3 * sd

    def test_degree_bias_visible_between_classes(self):
        # support holds a degree-3 hub and degree-1 leaves: the hub must be
        # drawn about 3^0.75 times as often as a leaf.
        g = ms.lift_to_single_layer_multiplex(
            ms.simple_graph(7, [(1, 2), (1, 3), (1, 4), (5, 0), (6, 0)]))
        anchor = 0  # neighbors are 5 and 6; support = {1, 2, 3, 4}
        cfg = NegativeSamplerConfig(q=1, distribution="degree_power", seed=0)
        rng = np.random.default_rng(7)
        n_draws = 100_000
        draws = draw_negatives(g, np.full(n_draws, anchor), cfg, rng).ravel()
        counts = np.bincount(draws, minlength=7)
        ratio = counts[1] / counts[2:5].mean()
        assert abs(ratio - 3 ** 0.75) < 0.15


class TestValidation:
    def test_q_must_be_positive(self):
        with pytest.raises(GraphError):
            NegativeSamplerConfig(q=0)

    def test_unknown_distribution(self):
        with pytest.raises(GraphError):
            NegativeSamplerConfig(distribution="zipf")

    def test_two_replica_graph(self):
        g = ms.build_graph(replicas=[(0, 0), (0, 1)],
                           intra_edges=[((0, 0), (0, 1))])
        cfg = NegativeSamplerConfig(q=2, seed=0)
        row = sample_negatives(0, g, cfg)  # saturated: falls back to {1}
        assert np.array_equal(row, [1, 1])
