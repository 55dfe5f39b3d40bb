import numpy as np
import pytest

import multisage as ms
from multisage.graph import GraphError
from multisage.model import ModelParams, forward
from multisage.sampling import NegativeSamplerConfig
from multisage.training import (TrainConfig, TrainingDivergedError,
                                contrastive_loss, contrastive_loss_grad,
                                log_sigmoid, train)

from conftest import coupled_ring_multiplex


class TestLossValue:
    @pytest.mark.parametrize("num_edges", [1, 10, 137])
    @pytest.mark.parametrize("q", [1, 5])
    def test_closed_form_at_zero_embeddings(self, num_edges, q):
        n = max(2 * num_edges, 4)
        z = np.zeros((n, 3))
        edges = np.array([(2 * i, 2 * i + 1) for i in range(num_edges)])
        negatives = np.zeros((num_edges, q), dtype=np.int64)
        got = contrastive_loss(z, edges, negatives)
        want = num_edges * (1 + q) * np.log(2.0)
        assert abs(got - want) < 1e-12

    def test_saturated_positive_term_vanishes(self):
        big = 80.0
        z = np.array([[big, 0.0], [1.0, 0.0], [0.0, 0.0]])
        edges = np.array([[0, 1]])
        negatives = np.array([[2]])
        # dot = 80: the positive term -log sig(80) underflows to 0; only the
        # negative term against the zero embedding remains.
        got = contrastive_loss(z, edges, negatives)
        assert abs(got - np.log(2.0)) < 1e-12

    def test_matches_direct_formula_on_frozen_toy(self):
        rng = np.random.default_rng(0)
        z = rng.normal(size=(6, 3))
        edges = np.array([[0, 1], [2, 3], [1, 4]])
        negatives = np.array([[5, 2], [0, 1], [3, 3]])
        sig = lambda x: 1.0 / (1.0 + np.exp(-x))
        want = 0.0
        for (u, v), negs in zip(edges, negatives):
            want -= np.log(sig(z[u] @ z[v]))
            for m in negs:
                want -= np.log(sig(-(z[u] @ z[m])))
        got = contrastive_loss(z, edges, negatives)
        assert abs(got - want) < 1e-12

    def test_log_sigmoid_never_overflows(self):
        x = np.array([-1e6, -50.0, 0.0, 50.0, 1e6])
        vals = log_sigmoid(x)
        assert np.isfinite(vals).all()
        assert vals[2] == pytest.approx(-np.log(2))
        assert vals[4] == 0.0

    def test_grad_matches_loss(self):
        rng = np.random.default_rng(1)
        z = rng.normal(size=(8, 4))
        edges = rng.integers(0, 8, size=(10, 2))
        edges = edges[edges[:, 0] != edges[:, 1]]
        negatives = rng.integers(0, 8, size=(len(edges), 3))
        loss_a = contrastive_loss(z, edges, negatives)
        loss_b, dz = contrastive_loss_grad(z, edges, negatives)
        assert loss_a == loss_b
        # finite-difference check on the embedding gradient itself
        h = 1e-6
        for _ in range(10):
            i = rng.integers(0, z.shape[0])
            j = rng.integers(0, z.shape[1])
            z[i, j] += h
            up = contrastive_loss(z, edges, negatives)
            z[i, j] -= 2 * h
            down = contrastive_loss(z, edges, negatives)
            z[i, j] += h
            fd = (up - down) / (2 * h)
            assert abs(fd - dz[i, j]) < 1e-5 * max(1.0, abs(fd))


class TestTrainLoop:
    def test_zero_learning_rate_freezes_params(self, two_layer_toy):
        g = two_layer_toy
        params = ModelParams.init_random("multisage", [4, 3], seed=0)
        for _, w in params.weight_items():
            w[:] = 0.0
        cfg = TrainConfig(optimizer="sgd", learning_rate=0.0, epochs=5, seed=0)
        result = train(g, g.flattened().edges, params, cfg,
                       NegativeSamplerConfig(seed=1))
        for (_, before), (_, after) in zip(params.weight_items(),
                                           result.params.weight_items()):
            assert np.array_equal(before, after)
        # all embeddings stay zero, so every epoch sees the closed-form loss
        q = NegativeSamplerConfig().q
        assert np.allclose(result.loss_history, (1 + q) * np.log(2.0), atol=1e-12)

    def test_loss_decreases_on_toy(self):
        g = coupled_ring_multiplex(n=24)
        wins = 0
        for seed in range(10):
            params = ModelParams.init_random(
                "multisage", [g.num_vertices, 8, 8], activation="identity",
                seed=seed)
            cfg = TrainConfig(epochs=40, learning_rate=1e-2, seed=seed)
            result = train(g, g.flattened().edges, params, cfg,
                           NegativeSamplerConfig(seed=seed + 100))
            if result.loss_history[-1] < result.loss_history[0]:
                wins += 1
        assert wins >= 9

    def test_bit_identical_reruns(self):
        g = coupled_ring_multiplex(n=16)
        def run():
            params = ModelParams.init_random("multisage", [g.num_vertices, 6, 4],
                                             seed=3)
            cfg = TrainConfig(epochs=8, learning_rate=5e-3, seed=11, batch_size=7)
            return train(g, g.flattened().edges, params, cfg,
                         NegativeSamplerConfig(seed=29))
        a, b = run(), run()
        assert np.array_equal(a.loss_history, b.loss_history)
        assert np.array_equal(a.embeddings, b.embeddings)

    def test_graphsage_equals_multisage_with_zero_inter_weights(self):
        # no couplings: the inter channel aggregates nothing, and with
        # identical remaining weights the trajectories coincide step for step
        base = ms.watts_strogatz(20, 4, 0.3, seed=2)
        g = ms.lift_to_single_layer_multiplex(base)
        ms_params = ModelParams.init_random("multisage", [20, 5, 4],
                                            activation="identity", seed=6)
        for w in ms_params.w_inter:
            w[:] = 0.0
        gs_params = ModelParams(
            mode="graphsage", dims=[20, 5, 4], activation="identity",
            w_intra=[w.copy() for w in ms_params.w_intra], w_inter=None,
            w_self=[w.copy() for w in ms_params.w_self])
        cfg = TrainConfig(epochs=6, learning_rate=1e-2, seed=1)
        neg = NegativeSamplerConfig(seed=2)
        out_ms = train(g, g.intra_pairs, ms_params, cfg, neg)
        out_gs = train(g, g.intra_pairs, gs_params, cfg, neg)
        assert np.array_equal(out_ms.loss_history, out_gs.loss_history)
        assert np.array_equal(out_ms.embeddings, out_gs.embeddings)

    def test_divergence_detection(self):
        g = coupled_ring_multiplex(n=12)
        params = ModelParams.init_random("multisage", [g.num_vertices, 4, 4],
                                         activation="identity", seed=0)
        cfg = TrainConfig(optimizer="sgd", learning_rate=1e12, epochs=50,
                          l2_normalize_output=False, seed=0)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingDivergedError, match="non-finite"):
                train(g, g.flattened().edges, params, cfg,
                      NegativeSamplerConfig(seed=1))

    def test_empty_edge_list_rejected(self, two_layer_toy):
        params = ModelParams.init_random("multisage", [4, 3], seed=0)
        with pytest.raises(GraphError, match="training edges"):
            train(two_layer_toy, np.empty((0, 2)), params, TrainConfig(),
                  NegativeSamplerConfig())

    def test_config_validation(self):
        with pytest.raises(GraphError):
            TrainConfig(learning_rate=-1.0)
        with pytest.raises(GraphError):
            TrainConfig(epochs=0)
        with pytest.raises(GraphError):
            TrainConfig(optimizer="rmsprop")
