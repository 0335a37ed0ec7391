"""Multilayer directed graphs: construction, ingestion, and aggregation.

A multigraph holds L directed 0/1 layers over a common node universe.
The adjacency convention throughout the package is that ``adjacency[l, i, j] == 1``
means node ``j`` can transmit to node ``i`` in layer ``l`` (equivalently, ``i``
names / pays attention to ``j``).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LayerSet = frozenset  # subset of layer indices for one ordered node pair


class EdgeFileError(ValueError):
    """Malformed edge-list file or records inconsistent with the declared universe."""


@dataclass(frozen=True)
class EdgeRecord:
    """One directed edge row: ``src`` receives from ``dst`` in ``layer``."""

    village: str
    layer: str
    src: int
    dst: int


@dataclass(frozen=True)
class MultiGraph:
    """Immutable stack of directed 0/1 layers over ``node_count`` nodes."""

    node_count: int
    layer_names: tuple[str, ...]
    adjacency: np.ndarray  # (L, n, n) uint8, read-only

    def __post_init__(self):
        adj = np.ascontiguousarray(self.adjacency, dtype=np.uint8)
        if adj.ndim != 3 or adj.shape != (len(self.layer_names), self.node_count, self.node_count):
            raise ValueError(f"adjacency shape {adj.shape} does not match "
                             f"{len(self.layer_names)} layers over {self.node_count} nodes")
        if len(self.layer_names) < 1:
            raise ValueError("at least one layer is required")
        if len(set(self.layer_names)) != len(self.layer_names):
            raise ValueError("layer names must be unique")
        for l, name in enumerate(self.layer_names):
            if np.diagonal(adj[l]).any():
                raise ValueError(f"layer {name!r} contains self-loops")
        adj.flags.writeable = False
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "layer_names", tuple(self.layer_names))

    @property
    def layer_count(self) -> int:
        return len(self.layer_names)

    def layer_index(self, label: str) -> int:
        try:
            return self.layer_names.index(label)
        except ValueError:
            raise KeyError(f"unknown layer {label!r}; declared layers: {list(self.layer_names)}")

    def layer(self, label: str) -> np.ndarray:
        """The (n, n) adjacency of one layer, by label."""
        return self.adjacency[self.layer_index(label)]

    def _check_node(self, i: int) -> None:
        if not (0 <= i < self.node_count):
            raise IndexError(f"node id {i} out of range [0, {self.node_count})")


def from_layers(layers: dict[str, np.ndarray] | Sequence[np.ndarray],
                layer_names: Sequence[str] | None = None) -> MultiGraph:
    """Build a MultiGraph from per-layer (n, n) arrays.

    Accepts either a name->array mapping or a sequence of arrays plus names.
    """
    if isinstance(layers, dict):
        names = tuple(layers.keys())
        mats = [np.asarray(layers[k]) for k in names]
    else:
        mats = [np.asarray(a) for a in layers]
        if layer_names is None:
            names = tuple(f"layer{l}" for l in range(len(mats)))
        else:
            names = tuple(layer_names)
    n = mats[0].shape[0]
    adj = np.stack([(m != 0).astype(np.uint8) for m in mats])
    return MultiGraph(node_count=n, layer_names=names, adjacency=adj)


def build_from_edges(records: Iterable[EdgeRecord], node_count: int,
                     layers: Sequence[str]) -> MultiGraph:
    """Assemble a MultiGraph from edge records; duplicates collapse to one edge.

    A record (src, dst) marks dst as a potential transmitter to src,
    i.e. adjacency[layer, src, dst] = 1.
    """
    names = tuple(layers)
    index = {name: l for l, name in enumerate(names)}
    adj = np.zeros((len(names), node_count, node_count), dtype=np.uint8)
    for rec in records:
        if rec.layer not in index:
            raise EdgeFileError(f"unknown layer label {rec.layer!r}; declared: {list(names)}")
        for node in (rec.src, rec.dst):
            if not (0 <= node < node_count):
                raise EdgeFileError(f"node id {node} out of range [0, {node_count})")
        if rec.src == rec.dst:
            raise EdgeFileError(f"self-loop record on node {rec.src} in layer {rec.layer!r}")
        adj[index[rec.layer], rec.src, rec.dst] = 1
    return MultiGraph(node_count=node_count, layer_names=names, adjacency=adj)


def layer_set(g: MultiGraph, i: int, j: int) -> LayerSet:
    """Set of layer indices in which j can transmit to i."""
    g._check_node(i)
    g._check_node(j)
    return frozenset(np.flatnonzero(g.adjacency[:, i, j]).tolist())


def neighbors(g: MultiGraph, i: int) -> set[int]:
    """Nodes linked to i in at least one layer (in the transmit-to-i direction)."""
    g._check_node(i)
    return set(np.flatnonzero(g.adjacency[:, i, :].any(axis=0)).tolist())


def aggregate(g: MultiGraph, mode: str) -> np.ndarray:
    """Collapse layers into one graph.

    mode='union': link present in any layer (0/1).
    mode='intersection': link present in all layers (0/1).
    mode='total': per-pair count of layers with a link (nonnegative int).
    """
    if mode == "union":
        return g.adjacency.any(axis=0).astype(np.uint8)
    if mode == "intersection":
        return g.adjacency.all(axis=0).astype(np.uint8)
    if mode == "total":
        return g.adjacency.sum(axis=0, dtype=np.int64)
    raise ValueError(f"unknown aggregation mode {mode!r}; use union|intersection|total")


def symmetrize(layer: np.ndarray) -> np.ndarray:
    """OR-symmetrization of a single directed 0/1 layer."""
    a = (np.asarray(layer) != 0).astype(np.uint8)
    return np.maximum(a, a.T)


def symmetrize_graph(g: MultiGraph) -> MultiGraph:
    """MultiGraph with every layer OR-symmetrized."""
    adj = np.maximum(g.adjacency, g.adjacency.transpose(0, 2, 1))
    return MultiGraph(node_count=g.node_count, layer_names=g.layer_names, adjacency=adj)


# ---------------------------------------------------------------------------
# Edge-list file format
#
# UTF-8 text. An optional manifest comment line, then the header, then rows:
#
#     # nodes=6 layers=red,green,blue
#     village,layer,src,dst
#     v1,red,1,2
#
# The manifest line (or the caller's node_count/layers arguments) supplies the
# node universe and the ordered layer list; src receives from dst.
# ---------------------------------------------------------------------------

EDGE_HEADER = "village,layer,src,dst"


def read_edge_file(path_or_text, node_count: int | None = None,
                   layers: Sequence[str] | None = None) -> dict[str, MultiGraph]:
    """Parse an edge-list file into one MultiGraph per village.

    node_count/layers arguments override the file's manifest line; at least one
    of the two sources must provide each.
    """
    if hasattr(path_or_text, "read"):
        text = path_or_text.read()
    else:
        with open(path_or_text, "r", encoding="utf-8") as fh:
            text = fh.read()
    lines = [ln.strip() for ln in io.StringIO(text)]
    lines = [ln for ln in lines if ln]

    pos = 0
    if pos < len(lines) and lines[pos].startswith("#"):
        manifest = _parse_manifest(lines[pos])
        pos += 1
        if node_count is None:
            node_count = manifest.get("nodes")
        if layers is None:
            layers = manifest.get("layers")
    if node_count is None or layers is None:
        raise EdgeFileError("node_count and layers must come from a manifest line "
                            "('# nodes=N layers=a,b,...') or be supplied by the caller")
    if pos >= len(lines) or lines[pos].lower() != EDGE_HEADER:
        raise EdgeFileError(f"expected header {EDGE_HEADER!r}")
    pos += 1

    by_village: dict[str, list[EdgeRecord]] = {}
    for ln in lines[pos:]:
        if ln.startswith("#"):
            continue
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 4:
            raise EdgeFileError(f"malformed edge row: {ln!r}")
        village, layer, src_s, dst_s = parts
        try:
            src, dst = int(src_s), int(dst_s)
        except ValueError:
            raise EdgeFileError(f"non-integer node id in row: {ln!r}")
        if src < 0 or dst < 0:
            raise EdgeFileError(f"negative node id in row: {ln!r}")
        by_village.setdefault(village, []).append(
            EdgeRecord(village=village, layer=layer, src=src, dst=dst))

    return {v: build_from_edges(recs, node_count, layers)
            for v, recs in sorted(by_village.items())}


def write_edge_file(path, graphs: dict[str, MultiGraph]) -> None:
    """Write villages to the edge-list format, manifest line included."""
    villages = sorted(graphs.items())
    first = villages[0][1]
    for _, g in villages:
        if g.layer_names != first.layer_names or g.node_count != first.node_count:
            raise ValueError("all villages in one file must share node_count and layers")
    rows = [f"# nodes={first.node_count} layers={','.join(first.layer_names)}", EDGE_HEADER]
    for village, g in villages:
        for l, name in enumerate(g.layer_names):
            src_ids, dst_ids = np.nonzero(g.adjacency[l])
            for s, d in zip(src_ids.tolist(), dst_ids.tolist()):
                rows.append(f"{village},{name},{s},{d}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")


def _parse_manifest(line: str) -> dict:
    out = {}
    for token in line.lstrip("#").split():
        if "=" not in token:
            continue
        key, val = token.split("=", 1)
        if key == "nodes":
            out["nodes"] = int(val)
        elif key == "layers":
            out["layers"] = tuple(v for v in val.split(",") if v)
    return out
