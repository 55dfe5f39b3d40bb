"""Neighborhood-aggregation embedding model over multiplex graphs.

Two modes share one engine:

* ``multisage`` keeps a replica's intra-layer and inter-layer neighborhoods
  separate, with one weight matrix per channel plus a self channel.
* ``graphsage`` ignores edge types: a single matrix aggregates the union
  neighborhood, plus the self channel. It runs identically on a
  :class:`~multisage.graph.FlattenedView`.

Per depth k the representation update is

    h_k(n) = act( W_intra_k @ mean{h_{k-1}(m) : intra neighbors of n}
                + W_inter_k @ mean{h_{k-1}(m) : inter neighbors of n}
                + W_self_k  @ h_{k-1}(n) )

where an empty neighborhood contributes a zero vector and no concatenation
takes place (the self term enters the sum). Input features default to
one-hot indicators, which are never materialized: depth-1 products against
them reduce to matrix columns.

Gradients are exact analytic backpropagation through this update and are
computed by :func:`backward` from the cache that :func:`forward` returns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .graph import FlattenedView, GraphError, MultiplexGraph

MODES = ("multisage", "graphsage")
ACTIVATIONS = ("relu", "sigmoid", "identity")

CHECKPOINT_FORMAT = "multisage-checkpoint"
CHECKPOINT_VERSION = 1


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return expit(z)
    return z


def _activation_grad_from_output(name: str, h: np.ndarray) -> np.ndarray:
    # Derivative expressed through the layer output; exact except on the
    # measure-zero relu kink, where the subgradient 0 is used.
    if name == "relu":
        return (h > 0).astype(np.float64)
    if name == "sigmoid":
        return h * (1.0 - h)
    return np.ones_like(h)


@dataclass
class ModelParams:
    """Weights of the aggregation stack.

    ``dims`` is [d_0, ..., d_K] with d_0 the input feature dimension. Each
    depth-k matrix has shape (d_k, d_{k-1}). In ``graphsage`` mode
    ``w_intra`` holds the single union-neighborhood matrix and ``w_inter``
    is None.
    """

    mode: str
    dims: list[int]
    activation: str = "relu"
    w_intra: list[np.ndarray] = field(default_factory=list)
    w_inter: list[np.ndarray] | None = None
    w_self: list[np.ndarray] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.dims) - 1

    @classmethod
    def init_random(cls, mode: str, dims: Sequence[int], activation: str = "relu",
                    seed=0) -> "ModelParams":
        """Glorot-normal initialization of all weight matrices."""
        if mode not in MODES:
            raise GraphError(f"unknown mode {mode!r}")
        if activation not in ACTIVATIONS:
            raise GraphError(f"unknown activation {activation!r}")
        dims = [int(d) for d in dims]
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise GraphError(f"invalid dims {dims}")
        rng = np.random.default_rng(seed)

        def make():
            return [rng.normal(0.0, np.sqrt(2.0 / (dims[k] + dims[k + 1])),
                               size=(dims[k + 1], dims[k]))
                    for k in range(len(dims) - 1)]

        return cls(mode=mode, dims=dims, activation=activation,
                   w_intra=make(),
                   w_inter=make() if mode == "multisage" else None,
                   w_self=make())

    def copy(self) -> "ModelParams":
        return ModelParams(
            mode=self.mode, dims=list(self.dims), activation=self.activation,
            w_intra=[w.copy() for w in self.w_intra],
            w_inter=None if self.w_inter is None else [w.copy() for w in self.w_inter],
            w_self=[w.copy() for w in self.w_self])

    def weight_items(self) -> list[tuple[str, np.ndarray]]:
        """Named references to every weight matrix, in a fixed order."""
        items = [(f"w_intra_{k + 1}", w) for k, w in enumerate(self.w_intra)]
        if self.w_inter is not None:
            items += [(f"w_inter_{k + 1}", w) for k, w in enumerate(self.w_inter)]
        items += [(f"w_self_{k + 1}", w) for k, w in enumerate(self.w_self)]
        return items

    def validate(self) -> None:
        if self.mode not in MODES:
            raise GraphError(f"unknown mode {self.mode!r}")
        if self.activation not in ACTIVATIONS:
            raise GraphError(f"unknown activation {self.activation!r}")
        k = self.depth
        groups = [self.w_intra, self.w_self] + ([self.w_inter] if self.mode == "multisage" else [])
        if self.mode == "graphsage" and self.w_inter is not None:
            raise GraphError("graphsage mode takes no inter-layer matrices")
        for mats in groups:
            if mats is None or len(mats) != k:
                raise GraphError(f"expected {k} matrices per channel")
            for depth, w in enumerate(mats, start=1):
                want = (self.dims[depth], self.dims[depth - 1])
                if w.shape != want:
                    raise GraphError(f"depth-{depth} matrix has shape {w.shape}, expected {want}")
                if not np.isfinite(w).all():
                    raise GraphError(f"non-finite entries in depth-{depth} matrix")


@dataclass
class ModelGradients:
    """Loss gradients, aligned with the ModelParams weight lists."""

    w_intra: list[np.ndarray]
    w_inter: list[np.ndarray] | None
    w_self: list[np.ndarray]

    def weight_items(self) -> list[tuple[str, np.ndarray]]:
        items = [(f"w_intra_{k + 1}", w) for k, w in enumerate(self.w_intra)]
        if self.w_inter is not None:
            items += [(f"w_inter_{k + 1}", w) for k, w in enumerate(self.w_inter)]
        items += [(f"w_self_{k + 1}", w) for k, w in enumerate(self.w_self)]
        return items


@dataclass
class ForwardCache:
    """Intermediates needed for exact backpropagation."""

    mode: str
    activation: str
    hs: list  # h_0..h_K; hs[0] is None for one-hot input
    p_intra: list  # per-depth mean-aggregation matrices (inter is None in graphsage mode)
    p_inter: list | None
    normalize_output: bool
    norms: np.ndarray | None  # pre-normalization row norms, if normalized


@dataclass
class ForwardResult:
    embeddings: np.ndarray
    cache: ForwardCache


def mean_aggregator(adjacency: sp.csr_matrix) -> sp.csr_matrix:
    """Row-normalized adjacency: row n averages over n's neighbors.

    Rows without neighbors are zero, so an empty neighborhood contributes
    the zero vector.
    """
    degrees = np.diff(adjacency.indptr)
    inverse = np.zeros(len(degrees), dtype=np.float64)
    nz = degrees > 0
    inverse[nz] = 1.0 / degrees[nz]
    return sp.csr_matrix(
        (np.repeat(inverse, degrees), adjacency.indices.copy(), adjacency.indptr.copy()),
        shape=adjacency.shape)


def _sampled_adjacency(adjacency: sp.csr_matrix, size: int,
                       rng: np.random.Generator) -> sp.csr_matrix:
    """Per-row subsample of at most ``size`` neighbors, without replacement."""
    n = adjacency.shape[0]
    indptr = [0]
    indices = []
    for row in range(n):
        nbrs = adjacency.indices[adjacency.indptr[row]:adjacency.indptr[row + 1]]
        if len(nbrs) > size:
            nbrs = np.sort(rng.choice(nbrs, size=size, replace=False))
        indices.append(nbrs)
        indptr.append(indptr[-1] + len(nbrs))
    indices = np.concatenate(indices) if indices else np.empty(0, dtype=np.int64)
    return sp.csr_matrix((np.ones(len(indices), dtype=np.int8), indices, np.array(indptr)),
                         shape=(n, n))


def _resolve_adjacency(graph, mode: str):
    """(intra, inter) CSR adjacencies, or (union, None) in graphsage mode."""
    if mode == "graphsage":
        view = graph if isinstance(graph, FlattenedView) else graph.flattened()
        return view.adjacency, None
    if isinstance(graph, FlattenedView):
        raise GraphError("multisage mode needs intra/inter edge types; got a flattened view")
    return graph.intra_matrix, graph.inter_matrix


def forward(graph, params: ModelParams, features: np.ndarray | None = None,
            neighbor_sample_sizes: Sequence[int] | None = None,
            rng: np.random.Generator | None = None,
            normalize_output: bool = True) -> ForwardResult:
    """Run the aggregation stack over every replica.

    ``features`` is an (N, d_0) array, or None for implicit one-hot inputs
    (then d_0 must equal N). With ``neighbor_sample_sizes`` given, depth k
    aggregates over at most sample_sizes[k-1] neighbors drawn without
    replacement from ``rng``; otherwise full neighborhoods are used and the
    output is independent of any neighbor ordering.
    """
    params.validate()
    n = graph.num_vertices
    if features is None:
        if params.dims[0] != n:
            raise GraphError(
                f"one-hot features need dims[0] == {n} replicas, got {params.dims[0]}")
    else:
        features = np.asarray(features, dtype=np.float64)
        if features.shape != (n, params.dims[0]):
            raise GraphError(
                f"feature matrix has shape {features.shape}, expected {(n, params.dims[0])}")

    adj_a, adj_b = _resolve_adjacency(graph, params.mode)
    depth = params.depth
    if neighbor_sample_sizes is not None:
        if len(neighbor_sample_sizes) != depth:
            raise GraphError("need one neighbor sample size per depth")
        if rng is None:
            raise GraphError("neighbor sampling requires an rng")
        adj_a_k = [_sampled_adjacency(adj_a, int(s), rng) for s in neighbor_sample_sizes]
        adj_b_k = (None if adj_b is None else
                   [_sampled_adjacency(adj_b, int(s), rng) for s in neighbor_sample_sizes])
    else:
        adj_a_k = [adj_a] * depth
        adj_b_k = None if adj_b is None else [adj_b] * depth

    p_a = [mean_aggregator(a) for a in adj_a_k]
    p_b = None if adj_b_k is None else [mean_aggregator(a) for a in adj_b_k]

    hs: list = [features]  # None means one-hot
    h = features
    for k in range(depth):
        w_a = params.w_intra[k]
        w_b = None if params.w_inter is None else params.w_inter[k]
        w_s = params.w_self[k]
        if h is None:
            z = p_a[k] @ w_a.T + w_s.T
            if w_b is not None:
                z = z + p_b[k] @ w_b.T
        else:
            z = (p_a[k] @ h) @ w_a.T + h @ w_s.T
            if w_b is not None:
                z = z + (p_b[k] @ h) @ w_b.T
        h = _activate(params.activation, np.asarray(z))
        hs.append(h)

    norms = None
    z_out = hs[-1]
    if normalize_output:
        norms = np.linalg.norm(z_out, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        z_out = z_out / safe[:, None]

    cache = ForwardCache(mode=params.mode, activation=params.activation, hs=hs,
                         p_intra=p_a, p_inter=p_b,
                         normalize_output=normalize_output, norms=norms)
    return ForwardResult(embeddings=z_out, cache=cache)


def backward(params: ModelParams, cache: ForwardCache,
             d_embeddings: np.ndarray) -> ModelGradients:
    """Exact gradient of a scalar loss wrt every weight matrix.

    ``d_embeddings`` is the loss gradient wrt the (possibly normalized)
    output embeddings, shaped (N, d_K). The cache must come from the
    forward pass that produced those embeddings.
    """
    g = np.asarray(d_embeddings, dtype=np.float64)
    h_final = cache.hs[-1]
    if cache.normalize_output:
        norms = cache.norms
        safe = np.where(norms > 0, norms, 1.0)
        unit = h_final / safe[:, None]
        # d(h/|h|) pullback: (g - (unit . g) unit) / |h|; zero rows stay zero.
        g = (g - (unit * g).sum(axis=1, keepdims=True) * unit) / safe[:, None]
        g[norms == 0] = 0.0

    depth = params.depth
    grads_a = [None] * depth
    grads_b = None if params.w_inter is None else [None] * depth
    grads_s = [None] * depth

    for k in range(depth - 1, -1, -1):
        h_out = cache.hs[k + 1]
        h_in = cache.hs[k]
        dz = g * _activation_grad_from_output(cache.activation, h_out)
        p_a = cache.p_intra[k]
        p_b = None if cache.p_inter is None else cache.p_inter[k]
        if h_in is None:  # one-hot input; aggregated inputs are the P rows themselves
            grads_a[k] = (p_a.T @ dz).T
            if grads_b is not None:
                grads_b[k] = (p_b.T @ dz).T
            grads_s[k] = dz.T.copy()
            break  # nothing below the input layer
        grads_a[k] = dz.T @ (p_a @ h_in)
        if grads_b is not None:
            grads_b[k] = dz.T @ (p_b @ h_in)
        grads_s[k] = dz.T @ h_in
        g = p_a.T @ (dz @ params.w_intra[k]) + dz @ params.w_self[k]
        if grads_b is not None:
            g = g + p_b.T @ (dz @ params.w_inter[k])

    return ModelGradients(w_intra=grads_a, w_inter=grads_b, w_self=grads_s)


def score_link(embeddings: np.ndarray, u: int, v: int) -> float:
    """Dot-product similarity of two replica embeddings."""
    return float(np.dot(embeddings[u], embeddings[v]))


def score_pairs(embeddings: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Vectorized dot products for an (M, 2) index-pair array."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) == 0:
        return np.empty(0, dtype=np.float64)
    return np.einsum("ij,ij->i", embeddings[pairs[:, 0]], embeddings[pairs[:, 1]])


def save_checkpoint(path, params: ModelParams, *, seed=None,
                    normalize_output: bool = True, extra: dict | None = None) -> None:
    """Write weights plus metadata to an ``.npz`` container.

    Layout (documented for stability): one array entry per weight matrix
    named ``w_intra_k`` / ``w_inter_k`` / ``w_self_k`` with k = 1..K, stored
    float64 row-major, plus a ``meta`` JSON string holding format name and
    version, mode, dims, activation, training seed, the output-normalization
    flag, and any extra provenance.
    """
    params.validate()
    meta = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "mode": params.mode,
        "dims": list(params.dims),
        "activation": params.activation,
        "seed": seed,
        "normalize_output": bool(normalize_output),
    }
    if extra:
        meta["extra"] = extra
    arrays = {name: np.ascontiguousarray(w, dtype=np.float64)
              for name, w in params.weight_items()}
    np.savez(path, meta=np.str_(json.dumps(meta, sort_keys=True)), **arrays)


@dataclass
class Checkpoint:
    params: ModelParams
    seed: object
    normalize_output: bool
    meta: dict


def load_checkpoint(path) -> Checkpoint:
    with np.load(path, allow_pickle=False) as data:
        try:
            meta = json.loads(str(data["meta"]))
        except KeyError:
            raise GraphError(f"{path}: not a checkpoint (missing meta entry)") from None
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise GraphError(f"{path}: unexpected container format {meta.get('format')!r}")
        if meta.get("version") != CHECKPOINT_VERSION:
            raise GraphError(f"{path}: unsupported checkpoint version {meta.get('version')!r}")
        depth = len(meta["dims"]) - 1
        params = ModelParams(
            mode=meta["mode"], dims=list(meta["dims"]), activation=meta["activation"],
            w_intra=[data[f"w_intra_{k}"] for k in range(1, depth + 1)],
            w_inter=([data[f"w_inter_{k}"] for k in range(1, depth + 1)]
                     if meta["mode"] == "multisage" else None),
            w_self=[data[f"w_self_{k}"] for k in range(1, depth + 1)])
    params.validate()
    return Checkpoint(params=params, seed=meta.get("seed"),
                      normalize_output=bool(meta.get("normalize_output", True)),
                      meta=meta)
