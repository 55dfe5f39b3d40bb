import json
import time

import numpy as np
import pytest
import yaml

import multisage as ms
from multisage.cli import main
from multisage.model import ModelParams, save_checkpoint


def write_dataset(tmp_path, name="toy.edges"):
    """Two coupled 8-rings plus one extra layer-1 edge."""
    lines = []
    for layer in (1, 2):
        for i in range(8):
            lines.append(f"{layer} {i} {(i + 1) % 8}")
    lines.append("1 0 4")
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def write_config(tmp_path, edges, extra=None, name="run.yaml"):
    config = {
        "version": 1,
        "seed": 3,
        "dataset": {"edges": str(edges)},
        "model": {"mode": "multisage", "hidden_dims": [8, 8],
                  "activation": "identity"},
        "train": {"epochs": 30, "learning_rate": 0.01},
        "negative_sampling": {"q": 3},
        "output": {"dir": str(tmp_path / "out")},
    }
    if extra:
        config.update(extra)
    path = tmp_path / name
    path.write_text(yaml.safe_dump(config))
    return path


class TestInspect:
    def test_prints_headline_counts(self, tmp_path, capsys):
        edges = write_dataset(tmp_path)
        assert main(["inspect", str(edges)]) == 0
        out = capsys.readouterr().out
        assert "16 nodes, 2 layers, 17 intra, 8 inter" in out

    def test_expect_match_and_mismatch(self, tmp_path, capsys):
        edges = write_dataset(tmp_path)
        assert main(["inspect", str(edges), "--expect", "16,2,17,8"]) == 0
        assert "MATCH" in capsys.readouterr().out
        assert main(["inspect", str(edges), "--expect", "99,2,17,8"]) == 3
        assert "MISMATCH" in capsys.readouterr().out

    def test_missing_file_is_data_error(self, tmp_path):
        assert main(["inspect", str(tmp_path / "absent.edges")]) == 3

    def test_malformed_file_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.edges"
        bad.write_text("1 a b\noops\n")
        assert main(["inspect", str(bad)]) == 3
        assert "bad.edges:2" in capsys.readouterr().err

    def test_data_dir_env(self, tmp_path, monkeypatch, capsys):
        edges = write_dataset(tmp_path)
        monkeypatch.setenv("MULTISAGE_DATA_DIR", str(tmp_path))
        assert main(["inspect", edges.name]) == 0
        assert "16 nodes" in capsys.readouterr().out


class TestTrain:
    def test_writes_artifacts_and_is_repeatable(self, tmp_path, capsys):
        edges = write_dataset(tmp_path)
        config = write_config(tmp_path, edges)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["train", str(config), "--output-dir", str(out_a)]) == 0
        assert main(["train", str(config), "--output-dir", str(out_b)]) == 0
        for out in (out_a, out_b):
            assert (out / "checkpoint.npz").exists()
            assert (out / "metrics.json").exists()
            assert (out / "loss_history.csv").exists()
            assert (out / "loss_history.png").exists()

        def stable(path):
            doc = json.loads(path.read_text())
            doc.pop("volatile")
            return doc

        assert stable(out_a / "metrics.json") == stable(out_b / "metrics.json")

    def test_checkpoint_metadata_honors_mode(self, tmp_path):
        edges = write_dataset(tmp_path)
        config = write_config(tmp_path, edges,
                              extra={"model": {"mode": "graphsage",
                                               "hidden_dims": [8, 8],
                                               "activation": "identity"}})
        out = tmp_path / "gs"
        assert main(["train", str(config), "--output-dir", str(out)]) == 0
        loaded = ms.load_checkpoint(out / "checkpoint.npz")
        assert loaded.params.mode == "graphsage"
        assert loaded.params.w_inter is None

    def test_missing_dataset_path_is_data_error(self, tmp_path):
        config = write_config(tmp_path, tmp_path / "nope.edges")
        assert main(["train", str(config)]) == 3

    def test_unknown_config_key_is_config_error(self, tmp_path, capsys):
        edges = write_dataset(tmp_path)
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump({
            "version": 1, "dataset": {"edges": str(edges)}, "bogus": 1}))
        assert main(["train", str(path)]) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_epoch_override_flag(self, tmp_path):
        edges = write_dataset(tmp_path)
        config = write_config(tmp_path, edges)
        out = tmp_path / "short"
        assert main(["train", str(config), "--output-dir", str(out),
                     "--epochs", "5"]) == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert len(metrics["loss_history"]) == 5


class TestSweep:
    def test_ws_smoke_profile_under_budget(self, tmp_path):
        config = tmp_path / "sweep.yaml"
        config.write_text(yaml.safe_dump({
            "version": 1,
            "seed": 5,
            "model": {"hidden_dims": [16, 16], "activation": "identity"},
            "train": {"epochs": 25, "learning_rate": 0.01},
            "sweep": {"kind": "ws_sweep", "runs_per_point": 3,
                      "ws": {"nodes": 2000, "degree": 4},
                      "phi_grid": [0.001, 1.0]},
            "output": {"dir": str(tmp_path / "res")},
        }))
        started = time.monotonic()
        assert main(["sweep", str(config)]) == 0
        elapsed = time.monotonic() - started
        assert elapsed < 300  # documented smoke budget
        res = tmp_path / "res"
        assert (res / "ws_sweep.csv").exists()
        assert (res / "ws_sweep.json").exists()
        assert (res / "ws_sweep.png").exists()
        assert (res / "resolved_config.json").exists()
        back = ms.read_results_csv(res / "ws_sweep.csv")
        assert [r.coordinate for r in back.rows] == [0.001, 1.0]

    def test_benchmark_writes_one_csv_per_dataset(self, tmp_path):
        edges_a = write_dataset(tmp_path, "first.edges")
        edges_b = write_dataset(tmp_path, "second.edges")
        config = tmp_path / "bench.yaml"
        config.write_text(yaml.safe_dump({
            "version": 1,
            "seed": 2,
            "model": {"hidden_dims": [8, 8], "activation": "identity"},
            "train": {"epochs": 10, "learning_rate": 0.01},
            "sweep": {"kind": "benchmark", "runs_per_point": 1,
                      "modes": ["multisage"],
                      "datasets": [{"name": "first", "edges": str(edges_a)},
                                   {"name": "second", "edges": str(edges_b)}]},
            "output": {"dir": str(tmp_path / "bench_out"), "figures": False},
        }))
        assert main(["sweep", str(config)]) == 0
        out = tmp_path / "bench_out"
        assert (out / "benchmark_first.csv").exists()
        assert (out / "benchmark_second.csv").exists()

    def test_invalid_kind_is_config_error(self, tmp_path):
        config = tmp_path / "bad.yaml"
        config.write_text(yaml.safe_dump({
            "version": 1, "sweep": {"kind": "walk_sweep"}}))
        assert main(["sweep", str(config)]) == 2


class TestScore:
    def make_checkpoint(self, tmp_path, graph, zero=False, seed=4):
        params = ModelParams.init_random("multisage",
                                         [graph.num_vertices, 8, 8],
                                         activation="identity", seed=seed)
        if zero:
            for _, w in params.weight_items():
                w[:] = 0.0
        path = tmp_path / "ckpt.npz"
        save_checkpoint(path, params, seed=seed, normalize_output=True)
        return path

    def test_self_pair_scores_one_with_normalization(self, tmp_path, capsys):
        edges = write_dataset(tmp_path)
        graph = ms.load_multiplex(edges)
        ckpt = self.make_checkpoint(tmp_path, graph)
        assert main(["score", str(ckpt), "--dataset", str(edges), "3,3"]) == 0
        out = capsys.readouterr().out.strip().split("\t")
        assert float(out[2]) == pytest.approx(1.0, abs=1e-12)

    def test_zero_checkpoint_scores_zero(self, tmp_path, capsys):
        edges = write_dataset(tmp_path)
        graph = ms.load_multiplex(edges)
        ckpt = self.make_checkpoint(tmp_path, graph, zero=True)
        assert main(["score", str(ckpt), "--dataset", str(edges), "0,5"]) == 0
        out = capsys.readouterr().out.strip().split("\t")
        assert float(out[2]) == 0.0

    def test_scores_match_library_scoring(self, tmp_path, capsys):
        edges = write_dataset(tmp_path)
        graph = ms.load_multiplex(edges)
        ckpt = self.make_checkpoint(tmp_path, graph)
        loaded = ms.load_checkpoint(ckpt)
        table = ms.forward(graph, loaded.params,
                           normalize_output=True).embeddings
        assert main(["score", str(ckpt), "--dataset", str(edges),
                     "0,9", "2,11", "0@0,0@1"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        for line in lines[:2]:
            u, v, score = line.split("\t")
            assert float(score) == pytest.approx(
                ms.score_link(table, int(u), int(v)), abs=1e-15)
        # label@layer resolution: replica 0 on both layers
        u, v, _ = lines[2].split("\t")
        assert graph.replica(int(u)).label == 0
        assert graph.replica(int(v)).label == 0

    def test_unknown_replica_is_data_error(self, tmp_path):
        edges = write_dataset(tmp_path)
        graph = ms.load_multiplex(edges)
        ckpt = self.make_checkpoint(tmp_path, graph)
        assert main(["score", str(ckpt), "--dataset", str(edges), "99@0,0@1"]) == 3


class TestSplitCommands:
    def test_export_then_import(self, tmp_path, capsys):
        edges = write_dataset(tmp_path)
        out = tmp_path / "split.txt"
        assert main(["split-export", str(edges), "--out", str(out),
                     "--seed", "5"]) == 0
        assert out.exists()
        assert main(["split-import", str(edges), str(out)]) == 0
        assert "marked" in capsys.readouterr().out

    def test_import_against_wrong_graph_fails(self, tmp_path):
        edges = write_dataset(tmp_path)
        out = tmp_path / "split.txt"
        assert main(["split-export", str(edges), "--out", str(out)]) == 0
        other = tmp_path / "other.edges"
        other.write_text("1 0 1\n1 1 2\n1 2 0\n")
        assert main(["split-import", str(other), str(out)]) == 3
