"""Readers for layered edge-list datasets.

Edge-list format, one intra-layer edge per line::

    layer_id node_u node_v [weight]

Tokens are whitespace-separated; ``#`` starts a comment; the optional weight
column is ignored. Coupling files declare explicit inter-layer links::

    layer_a node_a layer_b node_b

Purely numeric tokens are parsed as integers so layers and labels sort
numerically; anything else stays a string. Loading is deterministic: the
same bytes always produce the same index assignment.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .graph import GraphError, MultiplexGraph, build_graph

logger = logging.getLogger(__name__)

COUPLING_POLICIES = ("shared_label", "explicit", "none")


class ParseError(ValueError):
    """Malformed dataset file; carries the offending location."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def _token(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _data_lines(path):
    with open(path, "r", encoding="ascii") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield line_no, line.split()


def read_edge_file(path) -> list[tuple[int, object, object, object]]:
    """Parse intra-layer edge records as (line_no, layer, u, v) tuples."""
    records = []
    for line_no, tokens in _data_lines(path):
        if len(tokens) not in (3, 4):
            raise ParseError(path, line_no,
                             f"expected 'layer u v [weight]', got {len(tokens)} fields")
        layer, u, v = (_token(t) for t in tokens[:3])
        records.append((line_no, layer, u, v))
    return records


def read_coupling_file(path) -> list[tuple[int, tuple, tuple]]:
    """Parse coupling records as (line_no, (layer_a, a), (layer_b, b)) tuples."""
    records = []
    for line_no, tokens in _data_lines(path):
        if len(tokens) != 4:
            raise ParseError(path, line_no,
                             f"expected 'layer_a a layer_b b', got {len(tokens)} fields")
        la, a, lb, b = (_token(t) for t in tokens)
        records.append((line_no, (la, a), (lb, b)))
    return records


def load_multiplex(edge_path, coupling_path=None, coupling_policy: str = "shared_label",
                   keep_lcc: bool = True, validation: str = "close") -> MultiplexGraph:
    """Load a multiplex network from disk.

    Replicas are the (layer, label) pairs that appear in at least one
    intra-layer edge. Couplings come either from shared labels across layers
    (``shared_label``: every label's replicas form a coupling clique), from
    an explicit coupling file (``explicit``), or not at all (``none``).
    Duplicate edges and self-loops in the files are dropped. By default the
    result is restricted to its largest connected component.

    Raises
    ------
    ParseError
        On malformed lines or couplings that reference unknown replicas.
    """
    if coupling_policy not in COUPLING_POLICIES:
        raise GraphError(f"unknown coupling policy {coupling_policy!r}")
    if coupling_policy == "explicit" and coupling_path is None:
        raise GraphError("coupling_policy='explicit' requires a coupling file")

    records = read_edge_file(edge_path)
    if not records:
        raise ParseError(edge_path, 1, "file contains no edges")

    replicas: dict[tuple, None] = {}
    intra: dict[tuple, None] = {}
    dropped_loops = dropped_dupes = 0
    for _, layer, u, v in records:
        if u == v:
            dropped_loops += 1
            continue
        replicas.setdefault((layer, u), None)
        replicas.setdefault((layer, v), None)
        a, b = sorted((u, v), key=lambda x: (x.__class__.__name__, x))
        key = ((layer, a), (layer, b))
        if key in intra:
            dropped_dupes += 1
        else:
            intra[key] = None
    if dropped_loops or dropped_dupes:
        logger.debug("%s: dropped %d self-loops, %d duplicate edges",
                     edge_path, dropped_loops, dropped_dupes)

    inter: dict[tuple, None] = {}
    if coupling_policy == "shared_label":
        layers_by_label: dict = {}
        for layer, label in replicas:
            layers_by_label.setdefault(label, []).append(layer)
        for label, layers in layers_by_label.items():
            layers = sorted(layers, key=lambda x: (x.__class__.__name__, x))
            for i in range(len(layers)):
                for j in range(i + 1, len(layers)):
                    inter[((layers[i], label), (layers[j], label))] = None
    elif coupling_policy == "explicit":
        for line_no, a, b in read_coupling_file(coupling_path):
            if a not in replicas:
                raise ParseError(coupling_path, line_no, f"unknown replica {a}")
            if b not in replicas:
                raise ParseError(coupling_path, line_no, f"unknown replica {b}")
            if a == b:
                raise ParseError(coupling_path, line_no, f"self-coupling on {a}")
            key = tuple(sorted((a, b), key=lambda p: tuple((x.__class__.__name__, x) for x in p)))
            inter.setdefault(key, None)

    graph = build_graph(replicas, intra_edges=intra, inter_edges=inter,
                        validation=validation)
    if keep_lcc:
        graph = graph.largest_connected_component()
    return graph


def dataset_summary(graph: MultiplexGraph) -> dict:
    """Headline counts in the shape used by the inspect report."""
    return {
        "nodes": graph.num_vertices,
        "layers": graph.num_layers,
        "intra_edges": graph.num_intra_edges,
        "inter_edges": graph.num_inter_edges,
    }
