"""Reverse-mode differentiation over a small set of dense primitives.

Every primitive returns a :class:`Tensor` that remembers its op name, its
parents and whatever it needs for the vector-Jacobian product. ``backward``
walks the recorded graph in reverse topological order; an op without a
registered VJP raises :class:`UnsupportedPrimitive`.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import ShapeMismatch, UnsupportedPrimitive


class Tensor:
    __slots__ = ("value", "op", "parents", "ctx")

    def __init__(self, value, op: str = "const", parents: tuple = (), ctx=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.op = op
        self.parents = parents
        self.ctx = ctx

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.shape})"


def param(value) -> Tensor:
    return Tensor(np.array(value, dtype=np.float64), op="param")


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class BlockDiagonal:
    """Dense block-diagonal operator over rows stacked graph by graph.

    Blocks of equal size are grouped and applied with one batched matmul,
    which keeps many small graphs fast without sparse types.
    """

    def __init__(self, blocks: Sequence[np.ndarray]):
        sizes = [b.shape[0] for b in blocks]
        for b in blocks:
            if b.ndim != 2 or b.shape[0] != b.shape[1]:
                raise ShapeMismatch("blocks must be square matrices")
        self.sizes = np.asarray(sizes, dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.num_rows = int(self.offsets[-1])
        self.groups: list[tuple[np.ndarray, np.ndarray]] = []
        for n in sorted(set(sizes)):
            members = [k for k, s in enumerate(sizes) if s == n]
            rows = np.stack([np.arange(self.offsets[k], self.offsets[k] + n) for k in members])
            mats = np.stack([blocks[k] for k in members])
            self.groups.append((rows, mats))

    def apply(self, H: np.ndarray, transpose: bool = False) -> np.ndarray:
        if H.shape[0] != self.num_rows:
            raise ShapeMismatch(f"operator has {self.num_rows} rows, input has {H.shape[0]}")
        out = np.empty_like(H)
        for rows, mats in self.groups:
            M = np.swapaxes(mats, 1, 2) if transpose else mats
            out[rows] = M @ H[rows]
        return out


class Segments:
    """Row ranges of consecutive graphs in a stacked node matrix."""

    def __init__(self, sizes: Sequence[int]):
        self.sizes = np.asarray(sizes, dtype=np.int64)
        if self.sizes.size == 0 or (self.sizes <= 0).any():
            raise ShapeMismatch("segments must be nonempty")
        self.starts = np.concatenate([[0], np.cumsum(self.sizes)[:-1]])
        self.num_rows = int(self.sizes.sum())


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, name: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatch(f"{name}: shapes {a.shape} and {b.shape} do not broadcast") from None


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")
    return Tensor(a.value @ b.value, "matmul", (a, b))


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")
    return Tensor(a.value + b.value, "add", (a, b))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")
    return Tensor(a.value - b.value, "sub", (a, b))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")
    return Tensor(a.value * b.value, "mul", (a, b))


def relu(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(np.maximum(a.value, 0.0), "relu", (a,))


def square(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.value * a.value, "square", (a,))


def total(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.value.sum(), "sum", (a,))


def mean(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.value.mean(), "mean", (a,))


def propagate(op: BlockDiagonal, h) -> Tensor:
    """Left-multiply stacked node features by a block-diagonal operator."""
    h = as_tensor(h)
    return Tensor(op.apply(h.value), "propagate", (h,), op)


def segment_mean(h, segments: Segments) -> Tensor:
    """Mean of the rows of each segment (one output row per graph)."""
    h = as_tensor(h)
    if h.shape[0] != segments.num_rows:
        raise ShapeMismatch(f"segment_mean: {h.shape[0]} rows vs {segments.num_rows}")
    sums = np.add.reduceat(h.value, segments.starts, axis=0)
    return Tensor(sums / segments.sizes[:, None], "segment_mean", (h,), segments)


def log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax_cross_entropy(logits, labels) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under softmax(logits)."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.value.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeMismatch(f"cross entropy: logits {logits.shape}, labels {labels.shape}")
    logp = log_softmax(logits.value)
    loss = -logp[np.arange(labels.size), labels].mean()
    return Tensor(loss, "softmax_xent", (logits,), (logp, labels))


def _vjp_matmul(g, node):
    a, b = node.parents
    return g @ b.value.T, a.value.T @ g


def _vjp_add(g, node):
    a, b = node.parents
    return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)


def _vjp_sub(g, node):
    a, b = node.parents
    return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)


def _vjp_mul(g, node):
    a, b = node.parents
    return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)


def _vjp_relu(g, node):
    (a,) = node.parents
    return (g * (a.value > 0),)


def _vjp_square(g, node):
    (a,) = node.parents
    return (2.0 * a.value * g,)


def _vjp_sum(g, node):
    (a,) = node.parents
    return (np.broadcast_to(g, a.shape).copy(),)


def _vjp_mean(g, node):
    (a,) = node.parents
    return (np.broadcast_to(g / a.value.size, a.shape).copy(),)


def _vjp_propagate(g, node):
    return (node.ctx.apply(g, transpose=True),)


def _vjp_segment_mean(g, node):
    seg = node.ctx
    return (np.repeat(g / seg.sizes[:, None], seg.sizes, axis=0),)


def _vjp_softmax_xent(g, node):
    logp, labels = node.ctx
    probs = np.exp(logp)
    probs[np.arange(labels.size), labels] -= 1.0
    return (g * probs / labels.size,)


VJP: dict[str, Callable] = {
    "matmul": _vjp_matmul,
    "add": _vjp_add,
    "sub": _vjp_sub,
    "mul": _vjp_mul,
    "relu": _vjp_relu,
    "square": _vjp_square,
    "sum": _vjp_sum,
    "mean": _vjp_mean,
    "propagate": _vjp_propagate,
    "segment_mean": _vjp_segment_mean,
    "softmax_xent": _vjp_softmax_xent,
}

_LEAVES = ("const", "param")


def _topological(root: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor, wrt: Mapping[str, Tensor]) -> dict[str, np.ndarray]:
    """Gradients of the scalar ``loss`` with respect to each tensor in ``wrt``.

    Tensors in ``wrt`` that the loss does not depend on get zero gradients.
    """
    if loss.value.shape != ():
        raise ShapeMismatch(f"backward needs a scalar loss, got shape {loss.shape}")
    order = _topological(loss)
    needed = {id(t) for t in wrt.values()}
    # only propagate along paths that reach a requested leaf
    reaches: dict[int, bool] = {}
    for node in order:
        reaches[id(node)] = id(node) in needed or any(reaches[id(p)] for p in node.parents)

    grads: dict[int, np.ndarray] = {id(loss): np.ones(())}
    for node in reversed(order):
        g = grads.pop(id(node), None) if id(node) not in needed else grads.get(id(node))
        if g is None or node.op in _LEAVES or not reaches[id(node)]:
            continue
        vjp = VJP.get(node.op)
        if vjp is None:
            raise UnsupportedPrimitive(f"no gradient rule for op {node.op!r}")
        for parent, pg in zip(node.parents, vjp(g, node)):
            if not reaches[id(parent)]:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg
    return {name: grads.get(id(t), np.zeros_like(t.value)) for name, t in wrt.items()}
