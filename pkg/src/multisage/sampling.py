"""Negative samplers for the contrastive objective.

A negative for anchor n is drawn from the complement of n's closed
neighborhood in the flattened graph, either uniformly or proportionally to
degree^0.75. If that support is empty (the anchor is adjacent to everyone)
the draw falls back to uniform over all other replicas, with a warning.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .graph import FlattenedView, GraphError, MultiplexGraph

logger = logging.getLogger(__name__)

DISTRIBUTIONS = ("uniform", "degree_power")

_MAX_REJECTION_ROUNDS = 1000


@dataclass(frozen=True)
class NegativeSamplerConfig:
    """How many negatives to draw per positive edge, and from where."""

    q: int = 5
    distribution: str = "uniform"
    degree_exponent: float = 0.75
    seed: int = 0

    def __post_init__(self):
        if self.q < 1:
            raise GraphError(f"q must be >= 1, got {self.q}")
        if self.distribution not in DISTRIBUTIONS:
            raise GraphError(f"unknown negative distribution {self.distribution!r}")


def _flat_view(graph) -> FlattenedView:
    return graph if isinstance(graph, FlattenedView) else graph.flattened()


def draw_negatives(graph, anchors: np.ndarray, config: NegativeSamplerConfig,
                   rng: np.random.Generator) -> np.ndarray:
    """(len(anchors), q) matrix of negative replica indices.

    Row i holds q i.i.d. draws from the negative distribution of
    ``anchors[i]``. Deterministic given the rng state; single-threaded.
    """
    view = _flat_view(graph)
    n = view.num_vertices
    anchors = np.asarray(anchors, dtype=np.int64)
    if n < 2:
        raise GraphError("need at least two replicas to sample negatives")

    degrees = view.degrees
    saturated = degrees[anchors] >= n - 1
    if saturated.any():
        logger.warning(
            "%d anchors are adjacent to every other replica; falling back to "
            "uniform sampling over all others for them", int(saturated.sum()))

    if config.distribution == "degree_power":
        weights = degrees.astype(np.float64) ** config.degree_exponent
        total = weights.sum()
        if total <= 0:
            logger.warning("all degrees are zero; degree-weighted sampling "
                           "falls back to uniform")
            cdf = None
        else:
            cdf = np.cumsum(weights)
            cdf /= cdf[-1]
    else:
        cdf = None

    shape = (len(anchors), config.q)
    anchor_grid = np.broadcast_to(anchors[:, None], shape)
    saturated_grid = np.broadcast_to(saturated[:, None], shape)

    def draw(count: int) -> np.ndarray:
        if cdf is None:
            return rng.integers(0, n, size=count)
        return np.searchsorted(cdf, rng.random(count), side="right").astype(np.int64)

    candidates = draw(len(anchors) * config.q).reshape(shape)
    for _ in range(_MAX_REJECTION_ROUNDS):
        invalid = candidates == anchor_grid
        check = ~saturated_grid & ~invalid
        if check.any():
            hits = view.has_edges(anchor_grid[check], candidates[check])
            bad = np.zeros(shape, dtype=bool)
            bad[check] = hits
            invalid = invalid | bad
        if not invalid.any():
            return candidates.astype(np.int64)
        candidates = candidates.copy()
        candidates[invalid] = draw(int(invalid.sum()))
    raise GraphError("negative sampling failed to converge; graph too dense "
                     "for the requested distribution")


def sample_negatives(n: int, graph, config: NegativeSamplerConfig) -> np.ndarray:
    """q negative draws for a single anchor, seeded from the config."""
    rng = np.random.default_rng(config.seed)
    return draw_negatives(graph, np.array([n]), config, rng)[0]
