"""Per-node local structural features used as the autoencoder input."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptyInput, IndexOutOfRange
from .graph import Graph

FEATURE_NAMES = (
    "degree",
    "clustering",
    "triangles",
    "nbr_deg_mean",
    "nbr_deg_min",
    "nbr_deg_max",
    "nbr_deg_std",
    "ego_internal",
    "ego_boundary",
)
NUM_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class StructuralFeatureMatrix:
    graph_id: int
    values: np.ndarray  # N_i x 9, columns ordered as FEATURE_NAMES

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]


def triangle_counts(graph: Graph) -> np.ndarray:
    A = graph.adjacency
    return ((A @ A) * A).sum(axis=1) / 2.0


def clustering_coefficient(graph: Graph) -> np.ndarray:
    """Local clustering coefficient; 0 for nodes of degree < 2."""
    deg = graph.degrees.astype(float)
    tri = triangle_counts(graph)
    pairs = deg * (deg - 1.0) / 2.0
    out = np.zeros(graph.num_nodes)
    mask = deg >= 2
    out[mask] = tri[mask] / pairs[mask]
    return out


def egonet_edge_counts(graph: Graph, node: int) -> tuple[int, int]:
    """(internal, boundary) edge counts of the egonet {node} + neighbors."""
    if not 0 <= node < graph.num_nodes:
        raise IndexOutOfRange(f"node {node} not in graph with {graph.num_nodes} nodes")
    ego = graph.neighbors[node] | {node}
    internal = boundary = 0
    for u, v in graph.edges:
        inside = (u in ego) + (v in ego)
        if inside == 2:
            internal += 1
        elif inside == 1:
            boundary += 1
    return internal, boundary


def structural_feature_matrix(graph: Graph) -> StructuralFeatureMatrix:
    n = graph.num_nodes
    deg = graph.degrees.astype(float)
    tri = triangle_counts(graph)
    cc = clustering_coefficient(graph)

    nbr_stats = np.zeros((n, 4))
    for k, nbrs in enumerate(graph.neighbors):
        if nbrs:
            d = deg[sorted(nbrs)]
            nbr_stats[k] = (d.mean(), d.min(), d.max(), d.std())

    # edges from the node to its neighbours plus edges among the neighbours
    internal = deg + tri
    # every neighbour edge not pointing back at the node or across the egonet leaves it
    nbr_deg_sum = graph.adjacency @ deg
    boundary = nbr_deg_sum - deg - 2.0 * tri

    values = np.column_stack([deg, cc, tri, nbr_stats, internal, boundary])
    return StructuralFeatureMatrix(graph.id, values)


def zscore_normalize(features: Sequence[StructuralFeatureMatrix]) -> list[StructuralFeatureMatrix]:
    """Column-wise z-score over all nodes of all graphs jointly (population std).

    Zero-variance columns map to zeros.
    """
    features = list(features)
    if not features or sum(f.num_nodes for f in features) == 0:
        raise EmptyInput("no nodes to normalize")
    stacked = np.concatenate([f.values for f in features], axis=0)
    mean = stacked.mean(axis=0)
    std = (stacked - mean).std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    out = []
    for f in features:
        z = (f.values - mean) / scale
        z[:, std == 0] = 0.0
        out.append(StructuralFeatureMatrix(f.graph_id, z))
    return out


def dump_features_csv(features: Sequence[StructuralFeatureMatrix], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["graph_id", "node_id", *(f"f{k + 1}" for k in range(NUM_FEATURES))])
        for f in features:
            for node, row in enumerate(f.values):
                w.writerow([f.graph_id, node, *(repr(float(x)) for x in row)])
