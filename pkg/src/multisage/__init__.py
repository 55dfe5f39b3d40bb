"""Multiplex-network embedding with intra/inter-layer aware aggregation."""

from .graph import (FlattenedView, GraphError, MultiplexGraph, Replica,
                    build_graph)
from .ingest import ParseError, dataset_summary, load_multiplex
from .generators import (SimpleGraph, add_random_links, correlated_multiplex,
                         largest_layer, lift_to_single_layer_multiplex,
                         simple_graph, watts_strogatz)
from .model import (Checkpoint, ModelParams, forward, backward, load_checkpoint,
                    save_checkpoint, score_link, score_pairs)
from .sampling import NegativeSamplerConfig, draw_negatives, sample_negatives
from .training import (TrainConfig, TrainingDivergedError, TrainResult,
                       contrastive_loss, train)
from .evaluation import (DeltaSeries, EvalResult, EvalSplit, RocCurve,
                         aggregate_runs, delta, evaluate, export_split,
                         import_split, layer_order_by_size, make_split, roc_auc)
from .experiments import (ExperimentResult, ResultRow, RunSettings,
                          SplitSettings, derive_seed, emit_results,
                          read_results_csv, read_results_json, run_benchmark,
                          run_er_sweep, run_layer_sweep, run_ws_sweep)

__version__ = "0.1.0"

__all__ = [
    "FlattenedView", "GraphError", "MultiplexGraph", "Replica", "build_graph",
    "ParseError", "dataset_summary", "load_multiplex",
    "SimpleGraph", "add_random_links", "correlated_multiplex", "largest_layer",
    "lift_to_single_layer_multiplex", "simple_graph", "watts_strogatz",
    "Checkpoint", "ModelParams", "forward", "backward", "load_checkpoint",
    "save_checkpoint", "score_link", "score_pairs",
    "NegativeSamplerConfig", "draw_negatives", "sample_negatives",
    "TrainConfig", "TrainingDivergedError", "TrainResult", "contrastive_loss",
    "train",
    "DeltaSeries", "EvalResult", "EvalSplit", "RocCurve", "aggregate_runs",
    "delta", "evaluate", "export_split", "import_split", "layer_order_by_size",
    "make_split", "roc_auc",
    "ExperimentResult", "ResultRow", "RunSettings", "SplitSettings",
    "derive_seed", "emit_results", "read_results_csv", "read_results_json",
    "run_benchmark", "run_er_sweep", "run_layer_sweep", "run_ws_sweep",
    "__version__",
]
