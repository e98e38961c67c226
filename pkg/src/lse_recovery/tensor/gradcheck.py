from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import InvalidValue
from .autodiff import Tensor, backward
from .layers import ParamSet

LossFn = Callable[[dict], Tensor]


def finite_difference_check(
    loss_fn: LossFn,
    point: ParamSet,
    step: float = 1e-5,
    max_entries: int | None = None,
    seed: int = 0,
) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``loss_fn`` maps a dict of parameter tensors (or plain arrays) to a scalar
    tensor. With ``max_entries`` set, a seeded random subset of at least 50
    entries is checked instead of every entry. The relative error of an entry
    is ``|a - n| / max(|a|, |n|, 1e-8)``.
    """
    if not step > 0:
        raise InvalidValue(f"finite-difference step must be positive, got {step}")
    tensors = point.tensors()
    analytic = backward(loss_fn(tensors), tensors)

    entries = [(name, idx) for name, v in point.items() for idx in np.ndindex(v.shape)]
    if max_entries is not None and len(entries) > max(max_entries, 50):
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(entries), size=max(max_entries, 50), replace=False)
        entries = [entries[k] for k in sorted(pick)]

    worst = 0.0
    for name, idx in entries:
        shifted = point.copy()
        orig = shifted[name][idx]
        shifted[name][idx] = orig + step
        up = float(loss_fn(dict(shifted)).value)
        shifted[name][idx] = orig - step
        down = float(loss_fn(dict(shifted)).value)
        numeric = (up - down) / (2.0 * step)
        a = float(analytic[name][idx])
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        worst = max(worst, err)
    return worst
