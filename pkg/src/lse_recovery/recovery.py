"""Missing-feature recovery by nearest graphs and nearest nodes in embedding space.

For a recipient graph i with no features, the donors are the Q̄ closest
same-label graphs of T_full (by graph-embedding distance). Each recipient node
averages the features of its N̄ closest donor nodes (LSE-NN); the estimates
from all donors are then averaged. LSE-NG keeps the donors but copies rows
from randomly chosen donor nodes instead.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyNeighborSet, InvalidValue, NoDonorAvailable, ShapeMismatch, ZeroReference
from .graph import Graph

log = logging.getLogger(__name__)

BASELINES = ("zeros", "ones", "random", "degree")


def _row_distances(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    diff = np.asarray(points, dtype=float) - np.asarray(query, dtype=float)
    return np.sqrt((diff * diff).sum(axis=-1))


def nearest_graphs(
    i: int,
    graph_embeddings: np.ndarray,
    labels: Sequence[int],
    full_ids: Sequence[int],
    qbar: int,
    fallback: bool = True,
) -> list[int]:
    """Up to ``qbar`` ids from ``full_ids`` closest to graph ``i``, same label first.

    ``graph_embeddings`` and ``labels`` are indexed by ``id - 1``. Ties break
    by ascending id. Without any same-label donor, ``fallback`` selects the
    nearest graphs of any label (with a warning); otherwise NoDonorAvailable.
    """
    if qbar < 1:
        raise InvalidValue(f"qbar must be >= 1, got {qbar}")
    candidates = [j for j in full_ids if j != i]
    same = [j for j in candidates if labels[j - 1] == labels[i - 1]]
    if not same:
        if not fallback or not candidates:
            raise NoDonorAvailable(f"graph {i}: no donor graph with label {labels[i - 1]}")
        log.warning("graph %d: no same-label donor in T_full, using nearest graphs of any label", i)
        same = candidates
    same = sorted(same)
    dist = _row_distances(graph_embeddings[np.asarray(same) - 1], graph_embeddings[i - 1])
    order = np.argsort(dist, kind="stable")
    if len(same) < qbar:
        log.warning("graph %d: only %d donor graphs available for qbar=%d", i, len(same), qbar)
    return [same[k] for k in order[:qbar]]


def nearest_nodes(n: int, Z_i: np.ndarray, Z_j: np.ndarray, nbar: int) -> tuple[int, ...]:
    """The min(nbar, N_j) rows of ``Z_j`` closest to row ``n`` of ``Z_i`` (ties: lower index)."""
    if not 0 <= n < len(Z_i):
        raise InvalidValue(f"node {n} outside graph with {len(Z_i)} nodes")
    dist = _row_distances(Z_j, Z_i[n])
    return tuple(int(k) for k in np.argsort(dist, kind="stable")[:nbar])


def _nearest_node_table(Z_i: np.ndarray, Z_j: np.ndarray, nbar: int) -> tuple[tuple[int, ...], ...]:
    diff = Z_i[:, None, :] - Z_j[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=-1))
    order = np.argsort(dist, axis=1, kind="stable")[:, :nbar]
    return tuple(tuple(int(k) for k in row) for row in order)


@dataclass(frozen=True)
class NeighborPlan:
    recipient: int
    donors: tuple[int, ...]
    donor_distances: tuple[float, ...]
    # node_sets[d][n]: donor-node indices matched to recipient node n for donor donors[d]
    node_sets: tuple[tuple[tuple[int, ...], ...], ...]
    donor_sizes: tuple[int, ...]
    qbar: int
    nbar: int

    def nodes_for(self, j: int) -> tuple[tuple[int, ...], ...]:
        return self.node_sets[self.donors.index(j)]

    def to_dict(self) -> dict:
        return {
            "recipient": self.recipient,
            "qbar": self.qbar,
            "nbar": self.nbar,
            "donors": [
                {"graph_id": j, "distance": d, "num_nodes": s, "node_sets": [list(x) for x in sets]}
                for j, d, s, sets in zip(self.donors, self.donor_distances, self.donor_sizes, self.node_sets)
            ],
        }


def build_neighbor_plan(
    i: int,
    embeddings,
    labels: Sequence[int],
    full_ids: Sequence[int],
    qbar: int,
    nbar: int = 3,
) -> NeighborPlan:
    """Match graph ``i`` to its donor graphs and, per donor, each node to its closest donor nodes."""
    if nbar < 1:
        raise InvalidValue(f"nbar must be >= 1, got {nbar}")
    donors = nearest_graphs(i, embeddings.graph, labels, full_ids, qbar)
    Z_i = embeddings.node[i - 1]
    dists = tuple(float(_row_distances(embeddings.graph[j - 1], embeddings.graph[i - 1])) for j in donors)
    sets = tuple(_nearest_node_table(Z_i, embeddings.node[j - 1], nbar) for j in donors)
    sizes = tuple(len(embeddings.node[j - 1]) for j in donors)
    return NeighborPlan(i, tuple(donors), dists, sets, sizes, qbar, nbar)


def transfer_matrix(plan: NeighborPlan, j: int) -> np.ndarray:
    """C[n, l] = 1/|S_n| for l in S_n, the donor nodes matched to recipient node n."""
    sets = plan.nodes_for(j)
    C = np.zeros((len(sets), plan.donor_sizes[plan.donors.index(j)]))
    for n, s in enumerate(sets):
        if not s:
            raise EmptyNeighborSet(f"recipient node {n} has no matched nodes in graph {j}")
        C[n, list(s)] = 1.0 / len(s)
    return C


def lse_nn_estimate(plan: NeighborPlan, donor_features: Mapping[int, np.ndarray]) -> np.ndarray:
    """Average over donors of C @ X_donor (divisor = number of donors actually used)."""
    estimates = []
    for j in plan.donors:
        X_j = np.asarray(donor_features[j], dtype=float)
        C = transfer_matrix(plan, j)
        if X_j.shape[0] != C.shape[1]:
            raise ShapeMismatch(f"donor {j}: features for {X_j.shape[0]} nodes, expected {C.shape[1]}")
        estimates.append(C @ X_j)
    return sum(estimates) / len(estimates)


def lse_ng_estimate(
    num_nodes: int,
    donors: Sequence[int],
    donor_features: Mapping[int, np.ndarray],
    rng: np.random.Generator | int,
) -> np.ndarray:
    """Average over donors of rows copied from uniformly drawn donor nodes.

    Each recipient row independently picks a donor node (with replacement),
    donor by donor in the given order.
    """
    if not donors:
        raise NoDonorAvailable("LSE-NG needs at least one donor graph")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    total = None
    for j in donors:
        X_j = np.asarray(donor_features[j], dtype=float)
        pick = rng.integers(0, X_j.shape[0], size=num_nodes)
        total = X_j[pick] if total is None else total + X_j[pick]
    return total / len(donors)


def baseline_features(kind: str, graph: Graph, F: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Label-free stand-ins: constant zeros/ones, Uniform[0, 1) noise, or one-hot clamped degree."""
    if F < 1:
        raise InvalidValue(f"feature count must be >= 1, got {F}")
    n = graph.num_nodes
    if kind == "zeros":
        return np.zeros((n, F))
    if kind == "ones":
        return np.ones((n, F))
    if kind == "random":
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        return rng.random((n, F))
    if kind == "degree":
        X = np.zeros((n, F))
        X[np.arange(n), np.minimum(graph.degrees, F - 1)] = 1.0
        return X
    raise InvalidValue(f"unknown baseline {kind!r}")


def recovery_error(X: np.ndarray, X_hat: np.ndarray) -> float:
    """Relative Frobenius error ||X - X_hat||_F / ||X||_F."""
    X, X_hat = np.asarray(X, dtype=float), np.asarray(X_hat, dtype=float)
    if X.shape != X_hat.shape:
        raise ShapeMismatch(f"recovery error: {X.shape} vs {X_hat.shape}")
    ref = np.linalg.norm(X)
    if ref == 0:
        raise ZeroReference("true feature matrix has zero norm")
    return float(np.linalg.norm(X - X_hat) / ref)


def method_name(method: str, qbar: int | None = None) -> str:
    return method if qbar is None else f"{method}-q{qbar}"


def recover_features(
    method: str,
    graphs: Sequence[Graph],
    miss_ids: Sequence[int],
    full_ids: Sequence[int],
    full_features: Mapping[int, np.ndarray],
    num_features: int,
    seed: int | Sequence[int],
    embeddings=None,
    qbar: int = 1,
    nbar: int = 3,
) -> dict[int, np.ndarray]:
    """Estimated features for every graph in ``miss_ids``.

    ``graphs`` is the whole dataset (indexed by ``id - 1``); only features of
    ``full_ids`` graphs are read. Stochastic methods draw from one PCG64
    stream seeded with ``seed``, consuming draws in ascending recipient id.
    """
    rng = np.random.default_rng(seed)
    labels = [g.label for g in graphs]
    donor_features = {j: full_features[j] for j in full_ids}
    out = {}
    for i in sorted(miss_ids):
        g = graphs[i - 1]
        if method in BASELINES:
            out[i] = baseline_features(method, g, num_features, rng)
            continue
        if embeddings is None:
            raise InvalidValue(f"method {method!r} needs embeddings")
        if method == "lse-nn":
            plan = build_neighbor_plan(i, embeddings, labels, full_ids, qbar, nbar)
            out[i] = lse_nn_estimate(plan, donor_features)
        elif method == "lse-ng":
            donors = nearest_graphs(i, embeddings.graph, labels, full_ids, qbar)
            out[i] = lse_ng_estimate(g.num_nodes, donors, donor_features, rng)
        else:
            raise InvalidValue(f"unknown recovery method {method!r}")
    return out


def dump_recovered_csv(recovered: Mapping[int, np.ndarray], path: str | Path) -> None:
    ids = sorted(recovered)
    F = recovered[ids[0]].shape[1] if ids else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["graph_id", "node_id", *(f"x{k + 1}" for k in range(F))])
        for gid in ids:
            for node, row in enumerate(recovered[gid]):
                w.writerow([gid, node, *(repr(float(x)) for x in row)])


def dump_plans(plans: Sequence[NeighborPlan], path: str | Path) -> None:
    Path(path).write_text(json.dumps([p.to_dict() for p in plans], indent=1))
