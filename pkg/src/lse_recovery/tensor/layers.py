"""Parameters, initialization, dense layers and losses."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import InvalidValue, ShapeMismatch
from .autodiff import (
    BlockDiagonal,
    Tensor,
    add,
    as_tensor,
    matmul,
    mean,
    param,
    propagate,
    relu,
    softmax_cross_entropy,
    square,
    sub,
)


class ParamSet(dict):
    """Ordered mapping of parameter name -> float64 array."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        for k, v in self.items():
            super().__setitem__(k, np.asarray(v, dtype=np.float64))

    def copy(self) -> ParamSet:
        return ParamSet({k: v.copy() for k, v in self.items()})

    def tensors(self) -> dict[str, Tensor]:
        return {k: param(v) for k, v in self.items()}

    def num_entries(self) -> int:
        return sum(v.size for v in self.values())

    def same_as(self, other: ParamSet) -> bool:
        """Bitwise equality of names, order, shapes and values."""
        return list(self) == list(other) and all(
            self[k].shape == other[k].shape and self[k].tobytes() == other[k].tobytes() for k in self
        )


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_dense_stack(rng: np.random.Generator, widths: Sequence[int], prefix: str, bias: bool = True) -> ParamSet:
    """Glorot weights for consecutive layers ``widths[k] -> widths[k+1]``.

    Draws happen layer by layer, each weight matrix filled row-major.
    Biases start at zero and consume no draws.
    """
    params = ParamSet()
    for k, (fi, fo) in enumerate(zip(widths[:-1], widths[1:])):
        params[f"{prefix}W{k}"] = glorot_uniform(rng, fi, fo)
        if bias:
            params[f"{prefix}b{k}"] = np.zeros(fo)
    return params


def _activate(x: Tensor, activation: str) -> Tensor:
    if activation == "relu":
        return relu(x)
    if activation == "identity":
        return x
    raise InvalidValue(f"unknown activation {activation!r}")


def gcn_layer_forward(A_norm, H, W, activation: str = "relu") -> Tensor:
    """sigma(A_norm @ H @ W) for a dense or block-diagonal A_norm."""
    H, W = as_tensor(H), as_tensor(W)
    if H.value.ndim != 2 or W.value.ndim != 2 or H.shape[1] != W.shape[0]:
        raise ShapeMismatch(f"gcn layer: H {H.shape}, W {W.shape}")
    if isinstance(A_norm, BlockDiagonal):
        out = propagate(A_norm, matmul(H, W))
    else:
        A = as_tensor(A_norm)
        if A.value.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[1] != H.shape[0]:
            raise ShapeMismatch(f"gcn layer: A {A.shape}, H {H.shape}")
        out = matmul(matmul(A, H), W)
    return _activate(out, activation)


def mlp_layer_count(params, prefix: str = "") -> int:
    k = 0
    while f"{prefix}W{k}" in params:
        k += 1
    return k


def mlp_forward(H, params, prefix: str = "") -> Tensor:
    """Affine layers ``{prefix}W{k}``, ``{prefix}b{k}`` with relu between them, linear output."""
    h = as_tensor(H)
    n_layers = mlp_layer_count(params, prefix)
    if n_layers == 0:
        raise ShapeMismatch(f"no layers with prefix {prefix!r}")
    for k in range(n_layers):
        W = as_tensor(params[f"{prefix}W{k}"])
        b = as_tensor(params[f"{prefix}b{k}"])
        if h.shape[-1] != W.shape[0] or b.shape[-1] != W.shape[1]:
            raise ShapeMismatch(f"mlp layer {k}: input {h.shape}, W {W.shape}, b {b.shape}")
        h = add(matmul(h, W), b)
        if k < n_layers - 1:
            h = relu(h)
    return h


def loss(kind: str, pred, target) -> Tensor:
    """``mse``: mean squared entry difference; ``cross_entropy``: mean NLL of class indices."""
    if kind == "mse":
        pred, target = as_tensor(pred), as_tensor(target)
        if pred.shape != target.shape:
            raise ShapeMismatch(f"mse: {pred.shape} vs {target.shape}")
        return mean(square(sub(pred, target)))
    if kind == "cross_entropy":
        return softmax_cross_entropy(pred, target)
    raise InvalidValue(f"unknown loss {kind!r}")
