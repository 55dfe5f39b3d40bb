"""Declarative run configuration: YAML documents with a versioned schema.

Unknown keys are rejected everywhere so typos fail loudly. Command-line
flags may override individual values after the file is validated.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import jsonschema
import yaml

from .experiments import RunSettings, SplitSettings

CONFIG_VERSION = 1

DATA_DIR_ENV = "MULTISAGE_DATA_DIR"


class ConfigError(ValueError):
    """Invalid or unusable run configuration."""


_DATASET_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["edges"],
    "properties": {
        "name": {"type": "string"},
        "edges": {"type": "string"},
        "couplings": {"type": ["string", "null"]},
        "coupling_policy": {"enum": ["shared_label", "explicit", "none"]},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version"],
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "dataset": _DATASET_SCHEMA,
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["multisage", "graphsage"]},
                "hidden_dims": {"type": "array", "minItems": 1,
                                "items": {"type": "integer", "minimum": 1}},
                "activation": {"enum": ["relu", "sigmoid", "identity"]},
            },
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "optimizer": {"enum": ["adam", "sgd"]},
                "learning_rate": {"type": "number", "minimum": 0},
                "epochs": {"type": "integer", "minimum": 1},
                "batch_size": {"type": "integer", "minimum": 0},
                "l2_normalize_output": {"type": "boolean"},
                "neighbor_sample_sizes": {
                    "type": ["array", "null"],
                    "items": {"type": "integer", "minimum": 1}},
            },
        },
        "negative_sampling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "q": {"type": "integer", "minimum": 1},
                "distribution": {"enum": ["uniform", "degree_power"]},
            },
        },
        "split": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "marked_fraction": {"type": "number", "exclusiveMinimum": 0,
                                    "exclusiveMaximum": 1},
                "intra_test_fraction": {"type": "number", "exclusiveMinimum": 0,
                                        "exclusiveMaximum": 1},
                "neg_cap_factor": {"type": ["number", "null"], "minimum": 0},
                "marked_endpoints": {"enum": ["any", "both"]},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["benchmark", "layer_sweep", "er_sweep",
                                  "ws_sweep"]},
                "runs_per_point": {"type": "integer", "minimum": 1},
                "modes": {"type": "array", "minItems": 1,
                          "items": {"enum": ["multisage", "graphsage"]}},
                "datasets": {"type": "array", "minItems": 1,
                             "items": _DATASET_SCHEMA},
                "rho_grid": {"type": "array", "minItems": 1,
                             "items": {"type": "number", "minimum": 0,
                                       "maximum": 1}},
                "phi_grid": {"type": "array", "minItems": 1,
                             "items": {"type": "number", "minimum": 0,
                                       "maximum": 1}},
                "ws": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "nodes": {"type": "integer", "minimum": 4},
                        "degree": {"type": "integer", "minimum": 2},
                    },
                },
                "er_base": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "dataset": _DATASET_SCHEMA,
                        "ws": {
                            "type": "object",
                            "additionalProperties": False,
                            "properties": {
                                "nodes": {"type": "integer", "minimum": 4},
                                "degree": {"type": "integer", "minimum": 2},
                                "rewire_probability": {"type": "number",
                                                       "minimum": 0,
                                                       "maximum": 1},
                                "seed": {"type": "integer", "minimum": 0},
                            },
                        },
                    },
                },
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "formats": {"type": "array", "minItems": 1,
                            "items": {"enum": ["csv", "json"]}},
                "figures": {"type": "boolean"},
            },
        },
    },
}


def load_config(path) -> dict:
    """Read and schema-validate a YAML (or JSON) run configuration."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: invalid YAML ({err})") from err
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: configuration must be a mapping")
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        location = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {location}: {err.message}") from err
    return raw


def resolve_data_path(path_text: str) -> Path:
    """As given if it exists; otherwise relative to $MULTISAGE_DATA_DIR."""
    path = Path(path_text)
    if path.exists() or path.is_absolute():
        return path
    base = os.environ.get(DATA_DIR_ENV)
    if base:
        candidate = Path(base) / path
        if candidate.exists():
            return candidate
    return path


def run_settings_from_config(config: dict) -> RunSettings:
    model = config.get("model", {})
    trn = config.get("train", {})
    neg = config.get("negative_sampling", {})
    spl = config.get("split", {})
    sweep = config.get("sweep", {})
    split = SplitSettings(
        marked_fraction=spl.get("marked_fraction", 0.2),
        intra_test_fraction=spl.get("intra_test_fraction", 0.2),
        neg_cap_factor=spl.get("neg_cap_factor", 10.0),
        marked_endpoints=spl.get("marked_endpoints", "any"))
    return RunSettings(
        hidden_dims=tuple(model.get("hidden_dims", (128, 128))),
        activation=model.get("activation", "identity"),
        optimizer=trn.get("optimizer", "adam"),
        learning_rate=trn.get("learning_rate", 1e-2),
        epochs=trn.get("epochs", 300),
        batch_size=trn.get("batch_size", 0),
        l2_normalize_output=trn.get("l2_normalize_output", True),
        q=neg.get("q", 5),
        negative_distribution=neg.get("distribution", "uniform"),
        split=split,
        runs=sweep.get("runs_per_point", 20),
        modes=tuple(sweep.get("modes", ("multisage", "graphsage"))),
        master_seed=config.get("seed", 0))


def resolved_config_json(config: dict) -> str:
    return json.dumps(config, indent=2, sort_keys=True, default=str)
