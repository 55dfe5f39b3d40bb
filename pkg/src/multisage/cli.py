"""Command-line interface.

Subcommands: inspect, train, sweep, score, split-export, split-import.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure. Sweep and train reports write figures next to the delimited
output files.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import (ConfigError, load_config, resolve_data_path,
                     resolved_config_json, run_settings_from_config)
from .evaluation import evaluate, export_split, import_split, make_split
from .experiments import (ExperimentResult, derive_seed, emit_results,
                          run_benchmark, run_er_sweep, run_layer_sweep,
                          run_ws_sweep, settings_hash)
from .generators import largest_layer, watts_strogatz
from .graph import GraphError
from .ingest import ParseError, dataset_summary, load_multiplex
from .model import ModelParams, forward, load_checkpoint, save_checkpoint, score_link
from .sampling import NegativeSamplerConfig
from .training import TrainConfig, TrainingDivergedError, train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _load_dataset(edges, couplings=None, coupling_policy=None):
    policy = coupling_policy or ("explicit" if couplings else "shared_label")
    return load_multiplex(resolve_data_path(edges),
                          coupling_path=resolve_data_path(couplings) if couplings else None,
                          coupling_policy=policy)


def _dataset_from_config(section: dict):
    return _load_dataset(section["edges"], section.get("couplings"),
                         section.get("coupling_policy"))


def cmd_inspect(args) -> int:
    graph = _load_dataset(args.edges, args.couplings, args.coupling_policy)
    info = dataset_summary(graph)
    print(f"{info['nodes']} nodes, {info['layers']} layers, "
          f"{info['intra_edges']} intra, {info['inter_edges']} inter")
    if args.expect:
        expected = [int(x) for x in args.expect.split(",")]
        if len(expected) != 4:
            raise ConfigError("--expect needs nodes,layers,intra,inter")
        actual = [info["nodes"], info["layers"], info["intra_edges"],
                  info["inter_edges"]]
        if actual == expected:
            print("MATCH: counts equal the expected values")
        else:
            print(f"MISMATCH: expected {expected}, loaded {actual}")
            return EXIT_DATA
    return EXIT_OK


def _require(config: dict, key: str, path) -> dict:
    if key not in config:
        raise ConfigError(f"{path}: missing required section '{key}'")
    return config[key]


def cmd_train(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.epochs is not None:
        config.setdefault("train", {})["epochs"] = args.epochs
    dataset = _require(config, "dataset", args.config)
    settings = run_settings_from_config(config)
    mode = config.get("model", {}).get("mode", "multisage")
    out_dir = Path(args.output_dir or config.get("output", {}).get("dir", "runs"))
    out_dir.mkdir(parents=True, exist_ok=True)

    graph = _dataset_from_config(dataset)
    master = settings.master_seed
    split = make_split(graph,
                       marked_fraction=settings.split.marked_fraction,
                       intra_test_fraction=settings.split.intra_test_fraction,
                       neg_cap_factor=settings.split.neg_cap_factor,
                       marked_endpoints=settings.split.marked_endpoints,
                       seed=derive_seed(master, 0, 0))
    params = ModelParams.init_random(
        mode, [graph.num_vertices, *settings.hidden_dims],
        activation=settings.activation, seed=derive_seed(master, 1, 0))
    train_cfg = TrainConfig(
        optimizer=settings.optimizer, learning_rate=settings.learning_rate,
        epochs=settings.epochs, batch_size=settings.batch_size,
        neighbor_sample_sizes=(tuple(config.get("train", {})
                               .get("neighbor_sample_sizes") or ()) or None),
        l2_normalize_output=settings.l2_normalize_output,
        seed=derive_seed(master, 2, 0))
    neg_cfg = NegativeSamplerConfig(q=settings.q,
                                    distribution=settings.negative_distribution,
                                    seed=derive_seed(master, 3, 0))
    started = time.perf_counter()
    result = train(split.training_graph(graph), split.training_edges(),
                   params, train_cfg, neg_cfg)
    runtime = time.perf_counter() - started
    quality = evaluate(result.embeddings, split)

    checkpoint_path = out_dir / "checkpoint.npz"
    save_checkpoint(checkpoint_path, result.params, seed=master,
                    normalize_output=settings.l2_normalize_output,
                    extra={"config_sha256": settings_hash(config)})
    history_path = out_dir / "loss_history.csv"
    with open(history_path, "w", newline="", encoding="ascii") as out:
        writer = csv.writer(out)
        writer.writerow(["epoch", "mean_loss"])
        for epoch, value in enumerate(result.loss_history, start=1):
            writer.writerow([epoch, format(value, ".17g")])
    metrics = {
        "mode": mode,
        "master_seed": master,
        "resolved_config": config,
        "config_sha256": settings_hash(config),
        "loss_history": [float(v) for v in result.loss_history],
        "auc_intra": quality.auc_intra,
        "auc_inter": quality.auc_inter,
        "volatile": {"runtime_s": runtime},
    }
    metrics_path = out_dir / "metrics.json"
    with open(metrics_path, "w", encoding="ascii") as out:
        json.dump(metrics, out, indent=2, sort_keys=True)
        out.write("\n")
    written = [checkpoint_path, metrics_path, history_path]
    if config.get("output", {}).get("figures", True) and not args.no_figures:
        from .plotting import plot_loss_history
        figure_path = out_dir / "loss_history.png"
        plot_loss_history(result.loss_history, figure_path)
        written.append(figure_path)
    for path in written:
        print(f"wrote {path}")
    print(f"auc_intra={quality.auc_intra} auc_inter={quality.auc_inter}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config["seed"] = args.seed
    sweep = _require(config, "sweep", args.config)
    if args.runs is not None:
        sweep["runs_per_point"] = args.runs
    settings = run_settings_from_config(config)
    kind = sweep["kind"]
    out_dir = Path(args.output_dir or config.get("output", {}).get("dir", "results"))
    out_dir.mkdir(parents=True, exist_ok=True)
    formats = config.get("output", {}).get("formats", ["csv", "json"])
    figures = config.get("output", {}).get("figures", True) and not args.no_figures
    jobs = args.jobs

    results: list[tuple[str, ExperimentResult]] = []
    if kind in ("benchmark", "layer_sweep"):
        if "datasets" not in sweep:
            raise ConfigError(f"{args.config}: sweep.{kind} needs sweep.datasets")
        for section in sweep["datasets"]:
            name = section.get("name") or Path(section["edges"]).stem
            graph = _dataset_from_config(section)
            if kind == "benchmark":
                outcome = run_benchmark(graph, settings, name=name, jobs=jobs)
            else:
                outcome = run_layer_sweep(graph, settings, jobs=jobs)
            results.append((f"{kind}_{name}", outcome))
    elif kind == "er_sweep":
        base_cfg = sweep.get("er_base", {})
        if "dataset" in base_cfg:
            multiplex = _dataset_from_config(base_cfg["dataset"])
            base = largest_layer(multiplex)
        elif "ws" in base_cfg:
            ws = base_cfg["ws"]
            base = watts_strogatz(ws.get("nodes", 5000), ws.get("degree", 4),
                                  ws.get("rewire_probability", 0.05),
                                  seed=ws.get("seed", 0))
        else:
            raise ConfigError(f"{args.config}: er_sweep needs sweep.er_base "
                              "with a dataset or ws base")
        outcome = run_er_sweep(base, settings, rho_grid=sweep.get("rho_grid"),
                               jobs=jobs)
        results.append(("er_sweep", outcome))
    elif kind == "ws_sweep":
        ws = sweep.get("ws", {})
        outcome = run_ws_sweep(settings, n=ws.get("nodes", 10_000),
                               k=ws.get("degree", 4),
                               phi_grid=sweep.get("phi_grid"), jobs=jobs)
        results.append(("ws_sweep", outcome))

    config_path = out_dir / "resolved_config.json"
    config_path.write_text(resolved_config_json(config) + "\n", encoding="utf-8")
    print(f"wrote {config_path}")
    for stem, outcome in results:
        for fmt in formats:
            path = out_dir / f"{stem}.{fmt}"
            emit_results(outcome, fmt, path)
            print(f"wrote {path}")
        if figures:
            from .plotting import render_result
            for path in render_result(outcome, out_dir / f"{stem}.png"):
                print(f"wrote {path}")
    return EXIT_OK


def _parse_pair_token(token: str, graph):
    sides = token.split(",")
    if len(sides) != 2:
        raise ConfigError(f"pair {token!r} must be 'A,B'")

    def resolve(text: str) -> int:
        if "@" in text:
            label_text, layer_text = text.rsplit("@", 1)
            layer = int(layer_text) if layer_text.lstrip("-").isdigit() else layer_text
            label = int(label_text) if label_text.lstrip("-").isdigit() else label_text
            if isinstance(layer, str):
                raise ConfigError(f"layer in {text!r} must be the dense layer index")
            return graph.index_of(layer, label)
        if not text.lstrip("-").isdigit():
            raise ConfigError(f"replica {text!r} is neither an index nor label@layer")
        return int(text)

    return resolve(sides[0]), resolve(sides[1])


def cmd_score(args) -> int:
    checkpoint = load_checkpoint(resolve_data_path(args.checkpoint))
    graph = _load_dataset(args.dataset, args.couplings, args.coupling_policy)
    if checkpoint.params.dims[0] != graph.num_vertices:
        raise GraphError(
            f"checkpoint expects {checkpoint.params.dims[0]} replicas, "
            f"dataset has {graph.num_vertices}")
    out = forward(graph, checkpoint.params,
                  normalize_output=checkpoint.normalize_output)
    for token in args.pairs:
        u, v = _parse_pair_token(token, graph)
        if not (0 <= u < graph.num_vertices and 0 <= v < graph.num_vertices):
            raise GraphError(f"pair {token!r} is outside the graph")
        print(f"{u}\t{v}\t{score_link(out.embeddings, u, v):.17g}")
    return EXIT_OK


def cmd_split_export(args) -> int:
    graph = _load_dataset(args.edges, args.couplings, args.coupling_policy)
    split = make_split(graph, marked_fraction=args.marked_fraction,
                       intra_test_fraction=args.intra_test_fraction,
                       neg_cap_factor=args.neg_cap_factor, seed=args.seed,
                       marked_endpoints=args.marked_endpoints)
    export_split(split, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_split_import(args) -> int:
    graph = _load_dataset(args.edges, args.couplings, args.coupling_policy)
    split = import_split(args.split_file, graph)
    print(f"{len(split.marked)} marked, "
          f"{len(split.train_pos_intra) + len(split.train_pos_inter)} train pos, "
          f"{len(split.test_pos_intra)} test pos intra, "
          f"{len(split.test_pos_inter)} test pos inter, "
          f"{len(split.test_neg_intra)} test neg intra, "
          f"{len(split.test_neg_inter)} test neg inter")
    return EXIT_OK


def _add_dataset_flags(parser, positional="edges"):
    parser.add_argument(positional, help="layered edge-list file")
    parser.add_argument("--couplings", help="explicit coupling file")
    parser.add_argument("--coupling-policy", dest="coupling_policy",
                        choices=["shared_label", "explicit", "none"],
                        help="default: explicit when --couplings is given, "
                             "else shared_label")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multisage",
        description="Multiplex-network embedding and link-prediction experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v epoch progress, -vv batch detail")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="print dataset headline counts")
    _add_dataset_flags(p)
    p.add_argument("--expect", help="nodes,layers,intra,inter to compare against")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("train", help="train one model from a config file")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run an experiment sweep from a config file")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int, help="override runs per grid point")
    p.add_argument("--jobs", type=int, default=1,
                   help="grid points to run in parallel (default 1)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("score", help="score replica pairs with a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--dataset", required=True)
    p.add_argument("--couplings")
    p.add_argument("--coupling-policy", dest="coupling_policy",
                   choices=["shared_label", "explicit", "none"])
    p.add_argument("pairs", nargs="+",
                   help="pairs as 'u,v' global indices or 'label@layer,label@layer'")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("split-export", help="draw a split and write it to a file")
    _add_dataset_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--marked-fraction", type=float, default=0.2)
    p.add_argument("--intra-test-fraction", type=float, default=0.2)
    p.add_argument("--neg-cap-factor", type=float, default=10.0)
    p.add_argument("--marked-endpoints", choices=["any", "both"], default="any")
    p.set_defaults(func=cmd_split_export)

    p = sub.add_parser("split-import", help="read a split file back and verify it")
    _add_dataset_flags(p)
    p.add_argument("split_file")
    p.set_defaults(func=cmd_split_import)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, FileNotFoundError, GraphError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingDivergedError, FloatingPointError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
