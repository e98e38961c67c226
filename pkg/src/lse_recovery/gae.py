"""Graph autoencoder over structural features: GCN encoder, MLP decoder.

The encoder produces node embeddings Z; the mean of Z over nodes is the graph
embedding used to find similar graphs.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateCloud, DivergedTraining, EmptyMatrix, InvalidValue, ShapeMismatch
from .graph import Graph, normalized_adjacency
from .structural import NUM_FEATURES, StructuralFeatureMatrix
from .tensor import (
    AdamState,
    BlockDiagonal,
    ParamSet,
    Tensor,
    adam_step,
    backward,
    gcn_layer_forward,
    init_dense_stack,
    load_params,
    mlp_forward,
    mul,
    save_params,
    square,
    sub,
    total,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaeConfig:
    encoder_widths: tuple[int, ...] = (64, 16)  # last entry is the embedding size P
    decoder_hidden: tuple[int, ...] = (64,)
    lr: float = 1e-2
    epochs: int = 300

    def __post_init__(self):
        if not self.encoder_widths or min(self.encoder_widths) < 1 or min(self.decoder_hidden, default=1) < 1:
            raise InvalidValue("layer widths must be positive")
        if self.epochs < 1 or not self.lr > 0:
            raise InvalidValue("epochs must be >= 1 and lr > 0")

    @property
    def embedding_dim(self) -> int:
        return self.encoder_widths[-1]


@dataclass
class GaeModel:
    params: ParamSet
    in_dim: int = NUM_FEATURES

    @property
    def num_encoder_layers(self) -> int:
        k = 0
        while f"enc.W{k}" in self.params:
            k += 1
        return k

    @property
    def embedding_dim(self) -> int:
        return self.params[f"enc.W{self.num_encoder_layers - 1}"].shape[1]

    def save(self, path: str | Path) -> None:
        save_params(self.params, path, meta={"model": "gae", "in_dim": self.in_dim})

    @classmethod
    def load(cls, path: str | Path) -> GaeModel:
        params, meta = load_params(path)
        return cls(params, int(meta.get("in_dim", NUM_FEATURES)))


@dataclass(frozen=True)
class EmbeddingSet:
    node: tuple[np.ndarray, ...]  # Z for each graph, N_i x P
    graph: np.ndarray  # T x P, row i-1 belongs to graph id i

    @property
    def dim(self) -> int:
        return self.graph.shape[1]


def init_gae(config: GaeConfig, seed: int, in_dim: int = NUM_FEATURES) -> GaeModel:
    """Encoder weights first, then decoder, all from one PCG64 stream seeded with ``seed``."""
    rng = np.random.default_rng(seed)
    params = init_dense_stack(rng, (in_dim, *config.encoder_widths), "enc.", bias=False)
    params.update(init_dense_stack(rng, (config.embedding_dim, *config.decoder_hidden, in_dim), "dec."))
    return GaeModel(params, in_dim)


def encode(params, A_norm, F) -> Tensor:
    """GCN stack; relu after every layer except the last."""
    h = F
    n_layers = sum(1 for k in params if k.startswith("enc.W"))
    for k in range(n_layers):
        h = gcn_layer_forward(A_norm, h, params[f"enc.W{k}"], "relu" if k < n_layers - 1 else "identity")
    return h


def reconstruct(params, A_norm, F) -> Tensor:
    return mlp_forward(encode(params, A_norm, F), params, prefix="dec.")


class _Batch:
    """All graphs stacked row-wise with per-row weights giving mean-over-graphs MSE."""

    def __init__(self, graphs: Sequence[Graph], features: Sequence[StructuralFeatureMatrix]):
        if len(graphs) != len(features) or not graphs:
            raise ShapeMismatch("need one feature matrix per graph")
        for g, f in zip(graphs, features):
            if f.values.shape[0] != g.num_nodes:
                raise ShapeMismatch(f"graph {g.id}: {g.num_nodes} nodes, features {f.values.shape}")
        self.A = BlockDiagonal([normalized_adjacency(g) for g in graphs])
        self.F = np.concatenate([f.values for f in features], axis=0)
        sizes = np.array([g.num_nodes for g in graphs], dtype=float)
        row_w = np.repeat(1.0 / (len(graphs) * sizes * self.F.shape[1]), sizes.astype(np.int64))
        self.weights = np.broadcast_to(row_w[:, None], self.F.shape).copy()

    def loss(self, params) -> Tensor:
        return total(mul(square(sub(reconstruct(params, self.A, self.F), self.F)), self.weights))


def reconstruction_loss(params, graphs: Sequence[Graph], features: Sequence[StructuralFeatureMatrix]) -> float:
    """Mean over graphs of the per-graph reconstruction MSE."""
    return float(_Batch(graphs, features).loss(params).value)


def train_gae(
    features: Sequence[StructuralFeatureMatrix],
    graphs: Sequence[Graph],
    config: GaeConfig = GaeConfig(),
    seed: int = 0,
) -> tuple[GaeModel, list[float]]:
    """Full-batch training, one Adam step per epoch.

    Only topology and the structural feature matrices are read. ``history[e]``
    is the loss evaluated at the parameters entering epoch ``e``.
    """
    graphs = list(graphs.graphs) if hasattr(graphs, "graphs") else list(graphs)
    batch = _Batch(graphs, features)
    model = init_gae(config, seed, in_dim=batch.F.shape[1])
    params = model.params
    state = AdamState.fresh(params, lr=config.lr)
    history = []
    for epoch in range(config.epochs):
        tensors = params.tensors()
        value = batch.loss(tensors)
        lv = float(value.value)
        if not np.isfinite(lv):
            raise DivergedTraining(f"GAE loss became {lv} at epoch {epoch}")
        history.append(lv)
        grads = backward(value, tensors)
        params, state = adam_step(params, grads, state)
    log.debug("GAE trained: loss %.4f -> %.4f", history[0], history[-1])
    return GaeModel(params, model.in_dim), history


def node_embeddings(model: GaeModel, graph: Graph, features: StructuralFeatureMatrix | np.ndarray) -> np.ndarray:
    F = features.values if isinstance(features, StructuralFeatureMatrix) else np.asarray(features, dtype=float)
    if F.ndim != 2 or F.shape != (graph.num_nodes, model.in_dim):
        raise ShapeMismatch(f"expected features of shape ({graph.num_nodes}, {model.in_dim}), got {F.shape}")
    return encode(model.params, normalized_adjacency(graph), F).value


def graph_embedding(Z: np.ndarray) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] == 0:
        raise EmptyMatrix("graph embedding of an empty node set")
    return Z.mean(axis=0)


def embed_all(model: GaeModel, graphs: Sequence[Graph], features: Sequence[StructuralFeatureMatrix]) -> EmbeddingSet:
    node = tuple(node_embeddings(model, g, f) for g, f in zip(graphs, features))
    return EmbeddingSet(node, np.stack([graph_embedding(Z) for Z in node]))


def project_2d(points: np.ndarray, labels: Sequence[int] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Project rows onto the top two principal components.

    Eigenvalue ties keep component index order. Each component's largest
    magnitude loading is made positive. Returns ``(coords, labels)`` with
    ``coords`` of shape (n, 2).
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 2:
        raise ShapeMismatch("need at least 2 points of dimension >= 2")
    labels = np.zeros(X.shape[0], dtype=np.int64) if labels is None else np.asarray(labels, dtype=np.int64)
    if labels.shape != (X.shape[0],):
        raise ShapeMismatch("one label per point required")
    centered = X - X.mean(axis=0)
    if not np.any(centered):
        raise DegenerateCloud("all points are identical")
    cov = centered.T @ centered / X.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")[:2]
    comps = evecs[:, order]
    for c in range(2):
        k = int(np.argmax(np.abs(comps[:, c])))
        if comps[k, c] < 0:
            comps[:, c] = -comps[:, c]
    return centered @ comps, labels


def dump_embeddings_csv(embeddings: EmbeddingSet, path: str | Path, graph_ids: Sequence[int] | None = None) -> None:
    graph_ids = graph_ids or range(1, len(embeddings.node) + 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["graph_id", "node_id", *(f"z{k + 1}" for k in range(embeddings.dim))])
        for gid, Z in zip(graph_ids, embeddings.node):
            for node, row in enumerate(Z):
                w.writerow([gid, node, *(repr(float(x)) for x in row)])
