"""Contrastive loss, optimizers, and the training loop.

The objective sums, over the positive edges of the training graph, the
log-sigmoid similarity of the endpoints plus q log-sigmoid dissimilarity
terms against sampled negatives:

    J = - sum_(u,v) [ log sig(z_u . z_v) + sum_j log sig(-z_u . z_neg_j) ]

Negatives for an edge are anchored at its lower-index endpoint and resampled
every step. All randomness flows through two generators seeded from
TrainConfig.seed (shuffling, parameter-independent choices) and
NegativeSamplerConfig.seed (negative draws), so a run is reproducible bit
for bit in single-threaded mode.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .graph import GraphError
from .model import (ForwardResult, ModelGradients, ModelParams, backward, forward)
from .sampling import NegativeSamplerConfig, draw_negatives

logger = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "sgd")


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during optimization."""


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 100
    batch_size: int = 0  # edges per step; 0 = full batch
    neighbor_sample_sizes: tuple[int, ...] | None = None
    l2_normalize_output: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise GraphError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate < 0:
            raise GraphError("learning_rate must not be negative")
        if self.epochs < 1:
            raise GraphError("epochs must be >= 1")
        if self.batch_size < 0:
            raise GraphError("batch_size must be >= 0")


def log_sigmoid(x: np.ndarray) -> np.ndarray:
    """log(1 / (1 + exp(-x))), stable for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    return np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))


def _pair_dots(z: np.ndarray, a: np.ndarray, b: np.ndarray,
               chunk: int = 1 << 16) -> np.ndarray:
    # Chunked row dots: keeps the gathered temporaries cache-sized instead of
    # materializing two (pairs x dim) copies of the embedding table.
    out = np.empty(len(a), dtype=np.float64)
    for start in range(0, len(a), chunk):
        sel = slice(start, start + chunk)
        out[sel] = np.einsum("ij,ij->i", z[a[sel]], z[b[sel]])
    return out


def contrastive_loss(embeddings: np.ndarray, edges: np.ndarray,
                     negatives: np.ndarray) -> float:
    """Objective value for fixed negatives.

    ``negatives`` has one row of q indices per edge, scored against the
    edge's first endpoint.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    q = negatives.shape[1]
    pos = _pair_dots(embeddings, edges[:, 0], edges[:, 1])
    neg = _pair_dots(embeddings, np.repeat(edges[:, 0], q), negatives.reshape(-1))
    return float(-(log_sigmoid(pos).sum() + log_sigmoid(-neg).sum()))


def contrastive_loss_grad(embeddings: np.ndarray, edges: np.ndarray,
                          negatives: np.ndarray) -> tuple[float, np.ndarray]:
    """(loss, dJ/dz) for fixed negatives; dJ/dz is dense (N, d)."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    n, _ = embeddings.shape
    u, v = edges[:, 0], edges[:, 1]
    q = negatives.shape[1]
    u_rep = np.repeat(u, q)
    neg_flat = negatives.reshape(-1)
    pos = _pair_dots(embeddings, u, v)
    neg = _pair_dots(embeddings, u_rep, neg_flat)
    loss = float(-(log_sigmoid(pos).sum() + log_sigmoid(-neg).sum()))

    # d(-log sig(s))/ds = -sig(-s) for positives; d(-log sig(-s))/ds = sig(s)
    # for negatives. Assemble dJ/dz_r = sum_pairs coeff * z_other via a sparse
    # coefficient matrix, which handles repeated rows efficiently.
    pos_coeff = -expit(-pos)
    neg_coeff = expit(neg)
    rows = np.concatenate([u, v, u_rep, neg_flat])
    cols = np.concatenate([v, u, neg_flat, u_rep])
    data = np.concatenate([pos_coeff, pos_coeff, neg_coeff, neg_coeff])
    coeff = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    return loss, coeff @ embeddings


@dataclass
class TrainResult:
    params: ModelParams
    embeddings: np.ndarray
    loss_history: np.ndarray  # per-epoch mean loss per positive edge
    final_forward: ForwardResult | None = None


class _Optimizer:
    def __init__(self, config: TrainConfig, params: ModelParams):
        self.config = config
        self.step_count = 0
        if config.optimizer == "adam":
            self.m = [np.zeros_like(w) for _, w in params.weight_items()]
            self.v = [np.zeros_like(w) for _, w in params.weight_items()]

    def step(self, params: ModelParams, grads: ModelGradients) -> None:
        cfg = self.config
        weights = [w for _, w in params.weight_items()]
        gradients = [g for _, g in grads.weight_items()]
        if cfg.optimizer == "sgd":
            for w, g in zip(weights, gradients):
                w -= cfg.learning_rate * g
            return
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - cfg.beta1 ** t
        bias2 = 1.0 - cfg.beta2 ** t
        for w, g, m, v in zip(weights, gradients, self.m, self.v):
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            w -= cfg.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + cfg.eps)


def train(graph, training_edges: np.ndarray, params: ModelParams,
          train_config: TrainConfig, sampler_config: NegativeSamplerConfig,
          features: np.ndarray | None = None) -> TrainResult:
    """Fit the weight matrices on the given positive edges.

    Every epoch shuffles the edges, splits them into batches, and for each
    batch resamples negatives, runs the forward pass, backpropagates the
    sampled loss, and applies one optimizer step. The recorded history entry
    for an epoch is the summed batch loss divided by the number of positive
    edges. The input ``params`` object is not modified.

    Raises
    ------
    TrainingDivergedError
        As soon as a batch loss is non-finite.
    """
    edges = np.asarray(training_edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) == 0:
        raise GraphError("no training edges")
    params = params.copy()
    rng = np.random.default_rng(train_config.seed)
    neg_rng = np.random.default_rng(sampler_config.seed)
    optimizer = _Optimizer(train_config, params)
    batch = train_config.batch_size or len(edges)
    history = np.empty(train_config.epochs, dtype=np.float64)

    for epoch in range(train_config.epochs):
        order = rng.permutation(len(edges))
        total = 0.0
        for start in range(0, len(edges), batch):
            batch_edges = edges[order[start:start + batch]]
            negatives = draw_negatives(graph, batch_edges[:, 0], sampler_config, neg_rng)
            result = forward(graph, params, features=features,
                             neighbor_sample_sizes=train_config.neighbor_sample_sizes,
                             rng=rng if train_config.neighbor_sample_sizes else None,
                             normalize_output=train_config.l2_normalize_output)
            loss, d_embeddings = contrastive_loss_grad(result.embeddings,
                                                       batch_edges, negatives)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss} at epoch {epoch}, batch start {start} "
                    f"(lr={train_config.learning_rate}, optimizer={train_config.optimizer})")
            grads = backward(params, result.cache, d_embeddings)
            optimizer.step(params, grads)
            total += loss
            logger.debug("epoch %d batch %d loss %.6f", epoch, start // batch, loss)
        history[epoch] = total / len(edges)
        logger.info("epoch %d mean loss %.6f", epoch, history[epoch])

    final = forward(graph, params, features=features,
                    neighbor_sample_sizes=train_config.neighbor_sample_sizes,
                    rng=rng if train_config.neighbor_sample_sizes else None,
                    normalize_output=train_config.l2_normalize_output)
    return TrainResult(params=params, embeddings=final.embeddings,
                       loss_history=history, final_forward=final)
