"""Graph Isomorphism Network classifier used to score recovered features."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergedTraining, EmptyTestSet, InvalidValue, ShapeMismatch
from .graph import Graph
from .tensor import (
    AdamState,
    BlockDiagonal,
    ParamSet,
    Segments,
    Tensor,
    adam_step,
    backward,
    init_dense_stack,
    mlp_forward,
    propagate,
    relu,
    segment_mean,
    softmax_cross_entropy,
)

log = logging.getLogger(__name__)

Sample = tuple[Graph, np.ndarray, int]


@dataclass(frozen=True)
class GinConfig:
    num_layers: int = 2
    hidden: int = 64
    eps: float = 0.0
    lr: float = 1e-2
    epochs: int = 100

    def __post_init__(self):
        if self.num_layers < 1 or self.hidden < 1 or self.epochs < 1 or not self.lr > 0:
            raise InvalidValue(f"invalid GIN config {self}")
        if not np.isfinite(self.eps):
            raise InvalidValue("eps must be finite")


@dataclass
class GinModel:
    params: ParamSet
    eps: tuple[float, ...]
    num_classes: int
    history: dict = field(default_factory=dict)

    @property
    def num_layers(self) -> int:
        return len(self.eps)

    @property
    def in_dim(self) -> int:
        return self.params["gin0.W0"].shape[0]


def init_gin(in_dim: int, num_classes: int, config: GinConfig, seed: int | Sequence[int]) -> GinModel:
    """Layer-by-layer Glorot init (two affine maps per GIN layer), then the head."""
    rng = np.random.default_rng(seed)
    params = ParamSet()
    width = in_dim
    for layer in range(config.num_layers):
        params.update(init_dense_stack(rng, (width, config.hidden, config.hidden), f"gin{layer}."))
        width = config.hidden
    params.update(init_dense_stack(rng, (width, num_classes), "head."))
    return GinModel(params, (config.eps,) * config.num_layers, num_classes)


class GraphBatch:
    """Stacked node features plus the aggregation operators A + (1 + eps) I."""

    def __init__(self, graphs: Sequence[Graph], features: Sequence[np.ndarray], eps: Sequence[float]):
        if not graphs:
            raise ShapeMismatch("empty graph batch")
        for g, x in zip(graphs, features):
            if x.shape[0] != g.num_nodes:
                raise ShapeMismatch(f"graph {g.id}: {g.num_nodes} nodes but {x.shape[0]} feature rows")
        self.X = np.concatenate([np.asarray(x, dtype=float) for x in features], axis=0)
        self.segments = Segments([g.num_nodes for g in graphs])
        ops: dict[float, BlockDiagonal] = {}
        for e in eps:
            if e not in ops:
                ops[e] = BlockDiagonal([g.adjacency + (1.0 + e) * np.eye(g.num_nodes) for g in graphs])
        self.ops = [ops[e] for e in eps]


def gin_logits(params, batch: GraphBatch) -> Tensor:
    h = batch.X
    for layer, op in enumerate(batch.ops):
        h = relu(mlp_forward(propagate(op, h), params, prefix=f"gin{layer}."))
    return mlp_forward(segment_mean(h, batch.segments), params, prefix="head.")


def gin_forward(graph: Graph, X: np.ndarray, model: GinModel) -> np.ndarray:
    """Class logits for one graph."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.in_dim:
        raise ShapeMismatch(f"features have {X.shape[-1]} columns, model expects {model.in_dim}")
    return gin_logits(model.params, GraphBatch([graph], [X], model.eps)).value[0]


def _unzip(samples: Sequence[Sample]):
    graphs = [s[0] for s in samples]
    feats = [s[1] for s in samples]
    labels = np.array([s[2] for s in samples], dtype=np.int64)
    return graphs, feats, labels


def _accuracy(params, batch: GraphBatch, labels: np.ndarray) -> float:
    logits = gin_logits(params, batch).value
    return float((logits.argmax(axis=1) == labels).mean())


def evaluate_accuracy(model: GinModel, test: Sequence[Sample]) -> float:
    """Fraction of graphs whose argmax logit (lowest index on ties) is the true class."""
    if not test:
        raise EmptyTestSet("no test graphs")
    graphs, feats, labels = _unzip(test)
    return _accuracy(model.params, GraphBatch(graphs, feats, model.eps), labels)


def train_gin(
    train: Sequence[Sample],
    val: Sequence[Sample],
    config: GinConfig = GinConfig(),
    seed: int | Sequence[int] = 0,
    num_classes: int | None = None,
) -> GinModel:
    """Full-batch cross-entropy training with Adam.

    After every epoch's update the validation accuracy is measured; the
    returned model is the snapshot with the best validation accuracy
    (earliest epoch on ties). ``model.history`` holds the per-epoch training
    loss, validation accuracy and the selected epoch.
    """
    if not train or not val:
        raise InvalidValue("train and validation sets must be nonempty")
    tr_graphs, tr_feats, tr_labels = _unzip(train)
    va_graphs, va_feats, va_labels = _unzip(val)
    if num_classes is None:
        num_classes = int(max(tr_labels.max(), va_labels.max())) + 1
    model = init_gin(tr_feats[0].shape[1], num_classes, config, seed)
    tr_batch = GraphBatch(tr_graphs, tr_feats, model.eps)
    va_batch = GraphBatch(va_graphs, va_feats, model.eps)

    params = model.params
    state = AdamState.fresh(params, lr=config.lr)
    best_acc, best_epoch, best_params = -1.0, -1, params
    losses, val_accs = [], []
    for epoch in range(config.epochs):
        tensors = params.tensors()
        value = softmax_cross_entropy(gin_logits(tensors, tr_batch), tr_labels)
        lv = float(value.value)
        if not np.isfinite(lv):
            raise DivergedTraining(f"GIN loss became {lv} at epoch {epoch}")
        losses.append(lv)
        params, state = adam_step(params, backward(value, tensors), state)
        acc = _accuracy(params, va_batch, va_labels)
        val_accs.append(acc)
        if acc > best_acc:
            best_acc, best_epoch, best_params = acc, epoch, params
    history = {"train_loss": losses, "val_acc": val_accs, "best_epoch": best_epoch, "best_val_acc": best_acc}
    return GinModel(best_params, model.eps, num_classes, history)
