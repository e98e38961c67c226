"""Minimal dense reverse-mode autodiff, layers and Adam in float64."""

from .autodiff import (
    BlockDiagonal,
    Segments,
    Tensor,
    add,
    backward,
    matmul,
    mean,
    mul,
    param,
    propagate,
    relu,
    segment_mean,
    softmax_cross_entropy,
    square,
    sub,
    total,
)
from .checkpoint import load_params, save_params
from .gradcheck import finite_difference_check
from .layers import ParamSet, gcn_layer_forward, glorot_uniform, init_dense_stack, loss, mlp_forward
from .optim import AdamState, adam_step

__all__ = [
    "AdamState",
    "BlockDiagonal",
    "ParamSet",
    "Segments",
    "Tensor",
    "adam_step",
    "add",
    "backward",
    "finite_difference_check",
    "gcn_layer_forward",
    "glorot_uniform",
    "init_dense_stack",
    "load_params",
    "loss",
    "matmul",
    "mean",
    "mlp_forward",
    "mul",
    "param",
    "propagate",
    "relu",
    "save_params",
    "segment_mean",
    "softmax_cross_entropy",
    "square",
    "sub",
    "total",
]
