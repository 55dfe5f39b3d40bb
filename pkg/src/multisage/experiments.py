"""End-to-end experiment harness: benchmarks, layer sweeps, synthetic sweeps.

Every grid point is trained and evaluated over ``runs`` independent split
realizations and reported as mean and sample standard deviation. Seeds are
derived statelessly from the master seed, the run index, and the mode, so
rows are reproducible bit for bit regardless of execution order, and the two
modes of one run share the same split for a paired comparison.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .evaluation import (aggregate_runs, delta, evaluate, layer_order_by_size,
                         make_split)
from .generators import (SimpleGraph, add_random_links,
                         lift_to_single_layer_multiplex, watts_strogatz)
from .graph import GraphError, MultiplexGraph
from .model import ModelParams
from .sampling import NegativeSamplerConfig
from .training import TrainConfig, train

logger = logging.getLogger(__name__)

SWEEP_KINDS = ("benchmark", "layer_sweep", "er_sweep", "ws_sweep")

CSV_COLUMNS = ("coordinate", "mode", "auc_intra_mean", "auc_intra_std",
               "auc_inter_mean", "auc_inter_std", "delta", "runs", "seed",
               "runtime_s")

_PURPOSE_SPLIT, _PURPOSE_INIT, _PURPOSE_TRAIN, _PURPOSE_NEG, _PURPOSE_GRAPH = range(5)
_MODE_IDS = {"multisage": 1, "graphsage": 2}


@dataclass(frozen=True)
class SplitSettings:
    marked_fraction: float = 0.2
    intra_test_fraction: float = 0.2
    neg_cap_factor: float | None = 10.0
    marked_endpoints: str = "any"


@dataclass(frozen=True)
class RunSettings:
    """One experiment profile: model shape, optimization, split protocol."""

    hidden_dims: tuple[int, ...] = (128, 128)
    activation: str = "identity"
    optimizer: str = "adam"
    learning_rate: float = 1e-2
    epochs: int = 300
    batch_size: int = 0
    l2_normalize_output: bool = True
    q: int = 5
    negative_distribution: str = "uniform"
    split: SplitSettings = field(default_factory=SplitSettings)
    runs: int = 20
    modes: tuple[str, ...] = ("multisage", "graphsage")
    master_seed: int = 0

    def as_dict(self) -> dict:
        # JSON-canonical: tuples become lists so round-trips compare equal
        def convert(value):
            if isinstance(value, tuple):
                return [convert(v) for v in value]
            if isinstance(value, dict):
                return {k: convert(v) for k, v in value.items()}
            return value

        return convert(asdict(self))


@dataclass
class ResultRow:
    coordinate: object
    mode: str
    auc_intra_mean: float | None
    auc_intra_std: float | None
    auc_inter_mean: float | None
    auc_inter_std: float | None
    delta: float | None
    runs: int
    seed: int
    runtime_s: float
    auc_intra_runs: list | None = None
    auc_inter_runs: list | None = None

    def metrics_equal(self, other: "ResultRow") -> bool:
        """Equality on everything except wall time."""
        return (self.coordinate == other.coordinate and self.mode == other.mode
                and self.auc_intra_runs == other.auc_intra_runs
                and self.auc_inter_runs == other.auc_inter_runs
                and self.delta == other.delta and self.seed == other.seed)


@dataclass
class ExperimentResult:
    kind: str
    rows: list[ResultRow]
    settings: dict
    master_seed: int


def derive_seed(master_seed: int, *key: int) -> int:
    """Stateless child seed: identical inputs give identical seeds."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1)[0])


def _train_eval_once(graph: MultiplexGraph, mode: str, settings: RunSettings,
                     run_idx: int):
    master = settings.master_seed
    mode_id = _MODE_IDS[mode]
    split = make_split(graph,
                       marked_fraction=settings.split.marked_fraction,
                       intra_test_fraction=settings.split.intra_test_fraction,
                       neg_cap_factor=settings.split.neg_cap_factor,
                       marked_endpoints=settings.split.marked_endpoints,
                       seed=derive_seed(master, _PURPOSE_SPLIT, run_idx))
    params = ModelParams.init_random(
        mode, [graph.num_vertices, *settings.hidden_dims],
        activation=settings.activation,
        seed=derive_seed(master, _PURPOSE_INIT, run_idx, mode_id))
    train_cfg = TrainConfig(
        optimizer=settings.optimizer, learning_rate=settings.learning_rate,
        epochs=settings.epochs, batch_size=settings.batch_size,
        l2_normalize_output=settings.l2_normalize_output,
        seed=derive_seed(master, _PURPOSE_TRAIN, run_idx, mode_id))
    neg_cfg = NegativeSamplerConfig(
        q=settings.q, distribution=settings.negative_distribution,
        seed=derive_seed(master, _PURPOSE_NEG, run_idx, mode_id))
    result = train(split.training_graph(graph), split.training_edges(),
                   params, train_cfg, neg_cfg)
    return evaluate(result.embeddings, split)


def _run_point(graph: MultiplexGraph, mode: str, settings: RunSettings,
               coordinate, delta_value=None) -> ResultRow:
    started = time.perf_counter()
    intra_runs, inter_runs = [], []
    for run_idx in range(settings.runs):
        outcome = _train_eval_once(graph, mode, settings, run_idx)
        intra_runs.append(outcome.auc_intra)
        inter_runs.append(outcome.auc_inter)
        logger.info("point %s mode %s run %d/%d: intra=%s inter=%s",
                    coordinate, mode, run_idx + 1, settings.runs,
                    outcome.auc_intra, outcome.auc_inter)

    def stats(values):
        present = [v for v in values if v is not None]
        if not present:
            return None, None
        return aggregate_runs(present)

    intra_mean, intra_std = stats(intra_runs)
    inter_mean, inter_std = stats(inter_runs)
    return ResultRow(
        coordinate=coordinate, mode=mode,
        auc_intra_mean=intra_mean, auc_intra_std=intra_std,
        auc_inter_mean=inter_mean, auc_inter_std=inter_std,
        delta=delta_value, runs=settings.runs, seed=settings.master_seed,
        runtime_s=time.perf_counter() - started,
        auc_intra_runs=intra_runs, auc_inter_runs=inter_runs)


def _point_worker(payload) -> ResultRow:
    kind = payload["kind"]
    settings = payload["settings"]
    if kind == "graph":
        graph = payload["graph"]
    elif kind == "er":
        grown = add_random_links(payload["base"], payload["rho"],
                                 seed=payload["graph_seed"])
        graph = lift_to_single_layer_multiplex(grown)
    elif kind == "ws":
        lattice = watts_strogatz(payload["n"], payload["k"], payload["phi"],
                                 seed=payload["graph_seed"])
        graph = lift_to_single_layer_multiplex(lattice)
    else:
        raise GraphError(f"unknown worker payload kind {kind!r}")
    return _run_point(graph, payload["mode"], settings, payload["coordinate"],
                      payload.get("delta"))


def _map_jobs(payloads: list, jobs: int) -> list[ResultRow]:
    if jobs <= 1 or len(payloads) <= 1:
        return [_point_worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_point_worker, payloads))


def _sorted_rows(rows: list[ResultRow]) -> list[ResultRow]:
    return sorted(rows, key=lambda r: (str(r.coordinate), r.mode))


def run_benchmark(graph: MultiplexGraph, settings: RunSettings,
                  name: str = "full", jobs: int = 1) -> ExperimentResult:
    """Train and evaluate every mode on one dataset over repeated splits."""
    payloads = [{"kind": "graph", "graph": graph, "mode": mode,
                 "settings": settings, "coordinate": name}
                for mode in settings.modes]
    rows = _map_jobs(payloads, jobs)
    return ExperimentResult(kind="benchmark", rows=_sorted_rows(rows),
                            settings=settings.as_dict(),
                            master_seed=settings.master_seed)


def run_layer_sweep(graph: MultiplexGraph, settings: RunSettings,
                    jobs: int = 1) -> ExperimentResult:
    """Benchmark growing layer prefixes, largest layers first.

    The prefix of all layers is the original graph, so its rows match
    ``run_benchmark`` on the same settings. Each row carries the
    missing-coupling density of its prefix.
    """
    if graph.num_layers < 2:
        raise GraphError("layer sweep needs at least two layers")
    order = layer_order_by_size(graph)
    series = delta(graph, order)
    payloads = []
    for point in series.points:
        prefix = graph.subnetwork(order[:point.num_layers])
        for mode in settings.modes:
            payloads.append({"kind": "graph", "graph": prefix, "mode": mode,
                             "settings": settings,
                             "coordinate": point.num_layers,
                             "delta": point.value})
    rows = _map_jobs(payloads, jobs)
    rows.sort(key=lambda r: (r.coordinate, r.mode))
    return ExperimentResult(kind="layer_sweep", rows=rows,
                            settings=settings.as_dict(),
                            master_seed=settings.master_seed)


def default_rho_grid() -> list[float]:
    return [0.0] + list(np.logspace(-5, -1, 10))


def default_phi_grid() -> list[float]:
    return [0.0] + list(np.logspace(-4, 0, 10))


def run_er_sweep(base: SimpleGraph, settings: RunSettings,
                 rho_grid: Sequence[float] | None = None,
                 jobs: int = 1) -> ExperimentResult:
    """Densify a single-layer graph with ER noise and track prediction quality.

    Runs the type-blind mode only: a lifted single-layer graph has no
    couplings to separate.
    """
    grid = list(rho_grid) if rho_grid is not None else default_rho_grid()
    if not grid:
        raise GraphError("rho grid must be nonempty")
    payloads = [{"kind": "er", "base": base, "rho": float(rho),
                 "graph_seed": derive_seed(settings.master_seed, _PURPOSE_GRAPH, i),
                 "mode": "graphsage", "settings": settings,
                 "coordinate": float(rho)}
                for i, rho in enumerate(grid)]
    rows = _map_jobs(payloads, jobs)
    rows.sort(key=lambda r: r.coordinate)
    return ExperimentResult(kind="er_sweep", rows=rows,
                            settings=settings.as_dict(),
                            master_seed=settings.master_seed)


def run_ws_sweep(settings: RunSettings, n: int = 10_000, k: int = 4,
                 phi_grid: Sequence[float] | None = None,
                 jobs: int = 1) -> ExperimentResult:
    """Small-world rewiring sweep at constant edge density."""
    grid = list(phi_grid) if phi_grid is not None else default_phi_grid()
    if not grid:
        raise GraphError("phi grid must be nonempty")
    payloads = [{"kind": "ws", "n": int(n), "k": int(k), "phi": float(phi),
                 "graph_seed": derive_seed(settings.master_seed, _PURPOSE_GRAPH, i),
                 "mode": "graphsage", "settings": settings,
                 "coordinate": float(phi)}
                for i, phi in enumerate(grid)]
    rows = _map_jobs(payloads, jobs)
    rows.sort(key=lambda r: r.coordinate)
    return ExperimentResult(kind="ws_sweep", rows=rows,
                            settings=settings.as_dict(),
                            master_seed=settings.master_seed)


# serialization

def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def settings_hash(settings: dict) -> str:
    return hashlib.sha256(
        json.dumps(settings, sort_keys=True, default=str).encode()).hexdigest()


def emit_results(result: ExperimentResult, fmt: str, path) -> None:
    """Write an experiment result as CSV (fixed column order) or JSON.

    The JSON form is lossless: it keeps the per-run AUC values, the resolved
    settings, the master seed, and a hash of the settings for provenance.
    The CSV form carries the aggregate columns only.
    """
    if fmt == "csv":
        with open(path, "w", newline="", encoding="ascii") as out:
            writer = csv.writer(out)
            writer.writerow(CSV_COLUMNS)
            for row in result.rows:
                writer.writerow([_format_cell(getattr(row, col))
                                 for col in CSV_COLUMNS])
    elif fmt == "json":
        doc = {
            "format": "multisage-results",
            "version": 1,
            "kind": result.kind,
            "master_seed": result.master_seed,
            "settings": result.settings,
            "settings_sha256": settings_hash(result.settings),
            "rows": [asdict(row) for row in result.rows],
        }
        with open(path, "w", encoding="ascii") as out:
            json.dump(doc, out, indent=2, sort_keys=True)
            out.write("\n")
    else:
        raise GraphError(f"unknown result format {fmt!r}")


def _parse_coordinate(text: str):
    for caster in (int, float):
        try:
            return caster(text)
        except ValueError:
            continue
    return text


def read_results_csv(path) -> ExperimentResult:
    rows = []
    with open(path, "r", encoding="ascii") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise GraphError(f"{path}: unexpected CSV columns {reader.fieldnames}")
        for record in reader:
            rows.append(ResultRow(
                coordinate=_parse_coordinate(record["coordinate"]),
                mode=record["mode"],
                auc_intra_mean=float(record["auc_intra_mean"]) if record["auc_intra_mean"] else None,
                auc_intra_std=float(record["auc_intra_std"]) if record["auc_intra_std"] else None,
                auc_inter_mean=float(record["auc_inter_mean"]) if record["auc_inter_mean"] else None,
                auc_inter_std=float(record["auc_inter_std"]) if record["auc_inter_std"] else None,
                delta=float(record["delta"]) if record["delta"] else None,
                runs=int(record["runs"]), seed=int(record["seed"]),
                runtime_s=float(record["runtime_s"])))
    return ExperimentResult(kind="csv", rows=rows, settings={}, master_seed=-1)


def read_results_json(path) -> ExperimentResult:
    with open(path, "r", encoding="ascii") as handle:
        doc = json.load(handle)
    if doc.get("format") != "multisage-results":
        raise GraphError(f"{path}: not a results file")
    if doc.get("settings_sha256") != settings_hash(doc["settings"]):
        raise GraphError(f"{path}: settings hash mismatch")
    rows = [ResultRow(**record) for record in doc["rows"]]
    return ExperimentResult(kind=doc["kind"], rows=rows,
                            settings=doc["settings"],
                            master_seed=doc["master_seed"])
