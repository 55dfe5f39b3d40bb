"""Train/test split construction, ROC/AUC scoring, and the coupling-sparsity
diagnostic.

The split protocol marks a random fraction of replicas and holds out, as
test positives, a fraction of the intra-layer links touching marked replicas
plus every inter-layer link of a marked replica. Test negatives are sampled
among marked non-adjacent pairs (a fraction of the same-layer pairs, all of
the cross-layer pairs), train negatives among the remaining non-edges. Pools
can be capped at a multiple of the corresponding positive count; capping by
uniform subsampling leaves the AUC estimate unbiased.
"""

from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .graph import GraphError, MultiplexGraph, _pair_keys
from .model import score_pairs

logger = logging.getLogger(__name__)

ENDPOINT_RULES = ("any", "both")

# Below this many marked replicas the negative pools are enumerated exactly;
# above it they are rejection-sampled. Both paths draw uniform distinct
# pairs, so only the per-seed realization differs, never the distribution.
_ENUMERATION_LIMIT = 2048


@dataclass
class EvalSplit:
    """Positive/negative train/test pairs for one marked-node realization."""

    marked: np.ndarray
    train_pos_intra: np.ndarray
    train_pos_inter: np.ndarray
    test_pos_intra: np.ndarray
    test_pos_inter: np.ndarray
    train_neg: np.ndarray
    test_neg_intra: np.ndarray
    test_neg_inter: np.ndarray
    seed: object = None
    meta: dict = field(default_factory=dict)

    def training_edges(self) -> np.ndarray:
        return np.vstack([self.train_pos_intra, self.train_pos_inter])

    def test_positives(self) -> np.ndarray:
        return np.vstack([self.test_pos_intra, self.test_pos_inter])

    def training_graph(self, graph: MultiplexGraph) -> MultiplexGraph:
        """The graph the model may see: all test positives removed."""
        return graph.without_edges(self.test_positives())

    def __eq__(self, other) -> bool:
        if not isinstance(other, EvalSplit):
            return NotImplemented
        return all(np.array_equal(getattr(self, name), getattr(other, name))
                   for name in ("marked", "train_pos_intra", "train_pos_inter",
                                "test_pos_intra", "test_pos_inter", "train_neg",
                                "test_neg_intra", "test_neg_inter"))


def _sorted_pairs(pairs: np.ndarray) -> np.ndarray:
    if len(pairs) == 0:
        return np.empty((0, 2), dtype=np.int64)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def _choose_rows(pairs: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    if count >= len(pairs):
        return pairs
    picked = rng.choice(len(pairs), size=count, replace=False)
    return pairs[np.sort(picked)]


def _reject_sample_pairs(count: int, draw_endpoints, is_excluded, n: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Uniform distinct pairs via rejection; draw_endpoints yields candidates."""
    taken: set[int] = set()
    out = []
    while len(out) < count:
        u, v = draw_endpoints(max(64, 4 * (count - len(out))))
        swap = u > v
        u2 = np.where(swap, v, u)
        v2 = np.where(swap, u, v)
        ok = u2 != v2
        u2, v2 = u2[ok], v2[ok]
        keys = u2 * n + v2
        ok = ~is_excluded(u2, v2, keys)
        for key, a, b in zip(keys[ok], u2[ok], v2[ok]):
            k = int(key)
            if k not in taken:
                taken.add(k)
                out.append((int(a), int(b)))
                if len(out) == count:
                    break
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def make_split(graph: MultiplexGraph, marked_fraction: float = 0.2,
               intra_test_fraction: float = 0.2, neg_cap_factor: float | None = 10.0,
               seed=0, marked_endpoints: str = "any") -> EvalSplit:
    """Construct one train/test split.

    Steps, in fixed order for reproducibility: sample the marked replicas
    uniformly without replacement; hold out ``intra_test_fraction`` of the
    intra-layer edges incident to marked replicas (incident = at least one
    marked endpoint by default, both with ``marked_endpoints="both"``) and
    all inter-layer edges of marked replicas as test positives; sample test
    negatives among marked pairs (``intra_test_fraction`` of the same-layer
    non-adjacent pairs, all cross-layer non-adjacent pairs), each pool
    capped at ``neg_cap_factor`` times the matching positive count; sample
    train negatives from the remaining non-edges, one per train positive,
    under the same cap.

    Raises
    ------
    GraphError
        If the fractions leave no marked replicas or no unmarked ones.
    """
    if not 0.0 < marked_fraction < 1.0 or not 0.0 < intra_test_fraction < 1.0:
        raise GraphError("fractions must lie strictly between 0 and 1")
    if marked_endpoints not in ENDPOINT_RULES:
        raise GraphError(f"unknown endpoint rule {marked_endpoints!r}")
    n = graph.num_vertices
    n_marked = int(round(marked_fraction * n))
    if n_marked < 1 or n_marked >= n:
        raise GraphError(f"graph with {n} replicas is too small to mark "
                         f"a {marked_fraction} fraction")

    rng = np.random.default_rng(seed)
    marked = np.sort(rng.choice(n, size=n_marked, replace=False))
    marked_mask = np.zeros(n, dtype=bool)
    marked_mask[marked] = True

    intra = graph.intra_pairs
    inter = graph.inter_pairs
    if marked_endpoints == "any":
        intra_touch = marked_mask[intra[:, 0]] | marked_mask[intra[:, 1]]
    else:
        intra_touch = marked_mask[intra[:, 0]] & marked_mask[intra[:, 1]]
    candidates = intra[intra_touch]
    n_test_intra = int(round(intra_test_fraction * len(candidates)))
    test_pos_intra = _choose_rows(candidates, n_test_intra, rng)

    inter_touch = marked_mask[inter[:, 0]] | marked_mask[inter[:, 1]]
    test_pos_inter = inter[inter_touch]

    test_intra_keys = _pair_keys(test_pos_intra, n)
    train_pos_intra = intra[~np.isin(_pair_keys(intra, n), test_intra_keys)]
    train_pos_inter = inter[~inter_touch]

    # Negative pools among marked replicas. Sizes are computed exactly from
    # per-layer marked counts so both sampling paths use identical counts.
    layer_marked = np.bincount(graph.layer_of[marked], minlength=graph.num_layers)
    same_layer_pairs = int((layer_marked * (layer_marked - 1) // 2).sum())
    cross_pairs = n_marked * (n_marked - 1) // 2 - same_layer_pairs
    intra_both = int((marked_mask[intra[:, 0]] & marked_mask[intra[:, 1]]).sum())
    inter_both = int((marked_mask[inter[:, 0]] & marked_mask[inter[:, 1]]).sum())
    pool_intra_size = same_layer_pairs - intra_both
    pool_inter_size = cross_pairs - inter_both

    def cap(positive_count: int) -> int:
        if neg_cap_factor is None:
            return np.iinfo(np.int64).max
        return int(neg_cap_factor * positive_count)

    n_neg_intra = min(int(round(intra_test_fraction * pool_intra_size)),
                      cap(len(test_pos_intra)), pool_intra_size)
    n_neg_inter = min(pool_inter_size, cap(len(test_pos_inter)))

    edge_keys = np.sort(np.concatenate([_pair_keys(intra, n), _pair_keys(inter, n)]))
    layer_of = graph.layer_of

    if n_marked <= _ENUMERATION_LIMIT:
        ii, jj = np.triu_indices(n_marked, k=1)
        u, v = marked[ii], marked[jj]
        keys = u * n + v
        non_edge = ~np.isin(keys, edge_keys)
        same = layer_of[u] == layer_of[v]
        pool_intra = np.column_stack([u, v])[same & non_edge]
        pool_inter = np.column_stack([u, v])[~same & non_edge]
        assert len(pool_intra) == pool_intra_size and len(pool_inter) == pool_inter_size
        test_neg_intra = _choose_rows(pool_intra, n_neg_intra, rng)
        test_neg_inter = _choose_rows(pool_inter, n_neg_inter, rng)
    else:
        def draw_marked(count):
            picks = rng.integers(0, n_marked, size=(count, 2))
            return marked[picks[:, 0]], marked[picks[:, 1]]

        def excluded(for_same_layer):
            def check(u, v, keys):
                bad = np.isin(keys, edge_keys)
                same = layer_of[u] == layer_of[v]
                return bad | (same != for_same_layer)
            return check

        test_neg_intra = _sorted_pairs(_reject_sample_pairs(
            n_neg_intra, draw_marked, excluded(True), n, rng))
        test_neg_inter = _sorted_pairs(_reject_sample_pairs(
            n_neg_inter, draw_marked, excluded(False), n, rng))

    n_train_pos = len(train_pos_intra) + len(train_pos_inter)
    test_neg_keys = np.sort(np.concatenate([_pair_keys(test_neg_intra, n),
                                            _pair_keys(test_neg_inter, n)]))
    total_non_edges = n * (n - 1) // 2 - len(intra) - len(inter)
    available = total_non_edges - len(test_neg_keys)
    n_train_neg = min(n_train_pos, cap(n_train_pos), available)

    if n <= _ENUMERATION_LIMIT:
        ii, jj = np.triu_indices(n, k=1)
        keys = ii.astype(np.int64) * n + jj
        usable = ~np.isin(keys, edge_keys) & ~np.isin(keys, test_neg_keys)
        pool = np.column_stack([ii, jj])[usable]
        train_neg = _choose_rows(pool.astype(np.int64), n_train_neg, rng)
    else:
        def draw_all(count):
            picks = rng.integers(0, n, size=(count, 2))
            return picks[:, 0], picks[:, 1]

        def excluded_any(u, v, keys):
            return np.isin(keys, edge_keys) | np.isin(keys, test_neg_keys)

        train_neg = _sorted_pairs(_reject_sample_pairs(
            n_train_neg, draw_all, excluded_any, n, rng))

    meta = {
        "marked_fraction": marked_fraction,
        "intra_test_fraction": intra_test_fraction,
        "neg_cap_factor": neg_cap_factor,
        "marked_endpoints": marked_endpoints,
        "pool_intra_size": pool_intra_size,
        "pool_inter_size": pool_inter_size,
        "num_replicas": n,
    }
    return EvalSplit(marked=marked,
                     train_pos_intra=train_pos_intra, train_pos_inter=train_pos_inter,
                     test_pos_intra=test_pos_intra, test_pos_inter=test_pos_inter,
                     train_neg=train_neg,
                     test_neg_intra=test_neg_intra, test_neg_inter=test_neg_inter,
                     seed=seed, meta=meta)


@dataclass
class RocCurve:
    """Threshold sweep of (false positive rate, true positive rate)."""

    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


def roc_auc(pos_scores, neg_scores) -> RocCurve:
    """ROC curve and AUC for two score samples.

    The AUC is the rank statistic (#{pos > neg} + 0.5 #{pos = neg}) divided
    by the number of pairs: the probability that a random positive outscores
    a random negative, ties counted half. The curve sweeps the decision
    threshold over the distinct scores; its trapezoidal integral equals the
    rank statistic.
    """
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if len(pos) == 0 or len(neg) == 0:
        raise GraphError("both score lists must be nonempty")
    ranks = rankdata(np.concatenate([pos, neg]))
    auc = (ranks[:len(pos)].sum() - len(pos) * (len(pos) + 1) / 2.0) / (len(pos) * len(neg))

    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    pos_sorted = np.sort(pos)
    neg_sorted = np.sort(neg)
    tpr = (len(pos) - np.searchsorted(pos_sorted, thresholds, side="left")) / len(pos)
    fpr = (len(neg) - np.searchsorted(neg_sorted, thresholds, side="left")) / len(neg)
    return RocCurve(fpr=np.concatenate([[0.0], fpr]),
                    tpr=np.concatenate([[0.0], tpr]),
                    auc=float(auc))


@dataclass
class EvalResult:
    """Per-edge-type link-prediction quality on one split."""

    auc_intra: float | None
    auc_inter: float | None
    roc_intra: RocCurve | None
    roc_inter: RocCurve | None


def evaluate(embeddings: np.ndarray, split: EvalSplit) -> EvalResult:
    """Score the test pairs by embedding dot products and compute AUCs.

    A side whose positive or negative list is empty is reported as absent
    (None) rather than as a degenerate number.
    """
    arrays = [split.test_pos_intra, split.test_pos_inter,
              split.test_neg_intra, split.test_neg_inter]
    top = max((int(a.max()) for a in arrays if len(a)), default=-1)
    if top >= len(embeddings):
        raise GraphError(f"missing embedding for replica {top}; "
                         f"table covers {len(embeddings)}")

    def side(pos_pairs, neg_pairs):
        if len(pos_pairs) == 0 or len(neg_pairs) == 0:
            return None
        return roc_auc(score_pairs(embeddings, pos_pairs),
                       score_pairs(embeddings, neg_pairs))

    roc_intra = side(split.test_pos_intra, split.test_neg_intra)
    roc_inter = side(split.test_pos_inter, split.test_neg_inter)
    return EvalResult(
        auc_intra=None if roc_intra is None else roc_intra.auc,
        auc_inter=None if roc_inter is None else roc_inter.auc,
        roc_intra=roc_intra, roc_inter=roc_inter)


@dataclass
class DeltaPoint:
    num_layers: int
    value: float
    inter_edges: int
    layer_sizes: tuple[int, ...]


@dataclass
class DeltaSeries:
    """Missing-coupling density over growing layer prefixes."""

    layer_order: tuple[int, ...]
    points: list[DeltaPoint]

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])


def layer_order_by_size(graph: MultiplexGraph) -> tuple[int, ...]:
    """Layers sorted by replica count descending, ties by lower index."""
    sizes = graph.layer_sizes
    return tuple(sorted(range(graph.num_layers), key=lambda a: (-sizes[a], a)))


def delta(graph: MultiplexGraph, layer_order: Sequence[int] | None = None) -> DeltaSeries:
    """Fraction of potential couplings absent from each layer prefix.

    For the prefix of the first L ordered layers, the potential coupling
    count is sum over l = 2..L of (l-1) * N_l: each replica of the l-th
    added layer could couple to one replica on each earlier layer. The
    value is 1 - (actual couplings) / (potential couplings), in [0, 1].
    """
    if graph.num_layers < 2:
        raise GraphError("need at least two layers")
    order = tuple(layer_order) if layer_order is not None else layer_order_by_size(graph)
    if sorted(order) != list(range(graph.num_layers)):
        raise GraphError("layer_order must be a permutation of all layers")
    sizes = graph.layer_sizes
    points = []
    potential = 0
    for depth in range(2, graph.num_layers + 1):
        potential += (depth - 1) * sizes[order[depth - 1]]
        prefix = graph.subnetwork(order[:depth])
        m = prefix.num_inter_edges
        points.append(DeltaPoint(num_layers=depth,
                                 value=1.0 - m / potential,
                                 inter_edges=m,
                                 layer_sizes=tuple(sizes[a] for a in order[:depth])))
    return DeltaSeries(layer_order=order, points=points)


def aggregate_runs(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and (for more than one run) sample standard deviation.

    Uses exact rational arithmetic underneath, so identical runs produce a
    standard deviation of exactly zero.
    """
    values = [float(v) for v in values]
    if not values:
        raise GraphError("no values to aggregate")
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


# split files: one `type u v label` record per line, `#` comments. Types are
# `marked` (v column is -1), `intra`, or `inter`; labels are train_pos,
# test_pos, train_neg, test_neg, or `-` for marked rows.

_SPLIT_HEADER = "# multiplex-split v1"


def export_split(split: EvalSplit, path) -> None:
    """Write a split as replayable text records."""
    with open(path, "w", encoding="ascii") as out:
        out.write(_SPLIT_HEADER + "\n")
        out.write(f"# seed={split.seed!r}\n")
        for key, value in sorted(split.meta.items()):
            out.write(f"# {key}={value!r}\n")
        for m in split.marked:
            out.write(f"marked {int(m)} -1 -\n")
        sections = [("train_pos", split.train_pos_intra, "intra"),
                    ("train_pos", split.train_pos_inter, "inter"),
                    ("test_pos", split.test_pos_intra, "intra"),
                    ("test_pos", split.test_pos_inter, "inter"),
                    ("test_neg", split.test_neg_intra, "intra"),
                    ("test_neg", split.test_neg_inter, "inter")]
        for label, pairs, kind in sections:
            for u, v in pairs:
                out.write(f"{kind} {int(u)} {int(v)} {label}\n")
        for u, v in split.train_neg:
            out.write(f"pair {int(u)} {int(v)} train_neg\n")


def import_split(path, graph: MultiplexGraph) -> EvalSplit:
    """Read a split file back and verify it against the graph.

    Checks that positives are edges of the declared kind and that negatives
    are non-edges, so replays are trustworthy.
    """
    n = graph.num_vertices
    marked = []
    buckets: dict[tuple[str, str], list] = {}
    with open(path, "r", encoding="ascii") as handle:
        first = handle.readline().rstrip("\n")
        if first != _SPLIT_HEADER:
            raise GraphError(f"{path}: not a split file (header {first!r})")
        for line_no, raw in enumerate(handle, start=2):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 4:
                raise GraphError(f"{path}:{line_no}: expected 4 fields")
            kind, u, v, label = fields[0], int(fields[1]), int(fields[2]), fields[3]
            if kind == "marked":
                marked.append(u)
                continue
            if kind not in ("intra", "inter", "pair"):
                raise GraphError(f"{path}:{line_no}: unknown record type {kind!r}")
            buckets.setdefault((label, kind), []).append((u, v))

    def pairs_of(label, kind):
        rows = buckets.get((label, kind), [])
        return np.array(rows, dtype=np.int64).reshape(-1, 2)

    edge_keys = np.sort(np.concatenate([_pair_keys(graph.intra_pairs, n),
                                        _pair_keys(graph.inter_pairs, n)]))

    def verify(pairs, should_be_edge, what):
        if len(pairs) == 0:
            return
        if pairs.max() >= n or pairs.min() < 0:
            raise GraphError(f"{path}: {what} references replica outside the graph")
        keys = _pair_keys(np.sort(pairs, axis=1), n)
        is_edge = np.isin(keys, edge_keys)
        if should_be_edge and not is_edge.all():
            raise GraphError(f"{path}: a {what} record is not an edge of the graph")
        if not should_be_edge and is_edge.any():
            raise GraphError(f"{path}: a {what} record collides with an actual edge")

    split = EvalSplit(
        marked=np.array(sorted(marked), dtype=np.int64),
        train_pos_intra=pairs_of("train_pos", "intra"),
        train_pos_inter=pairs_of("train_pos", "inter"),
        test_pos_intra=pairs_of("test_pos", "intra"),
        test_pos_inter=pairs_of("test_pos", "inter"),
        train_neg=pairs_of("train_neg", "pair"),
        test_neg_intra=pairs_of("test_neg", "intra"),
        test_neg_inter=pairs_of("test_neg", "inter"),
        seed=None, meta={"imported_from": str(path)})
    for name, should in (("train_pos_intra", True), ("train_pos_inter", True),
                         ("test_pos_intra", True), ("test_pos_inter", True),
                         ("train_neg", False), ("test_neg_intra", False),
                         ("test_neg_inter", False)):
        verify(getattr(split, name), should, name)
    return split
