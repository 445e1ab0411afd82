"""Adam updates over named parameter tensors."""
from __future__ import annotations

import numpy as np

from ..errors import StateError
from .tensor import Tensor


def new_adam_state() -> dict:
    """Empty moment buffers; pass the same dict to every adam_step call."""
    return {"m": {}, "v": {}}


def adam_step(
    params: dict[str, Tensor],
    state: dict,
    lr: float = 1e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    t: int = 1,
) -> None:
    """One bias-corrected Adam update, in place.

    t is the 1-based step index; moment buffers live in `state` and persist
    across calls. Gradients are read, never modified or cleared here.
    """
    if t < 1:
        raise ValueError(f"step index must be >= 1, got {t}")
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    m_buf, v_buf = state["m"], state["v"]
    for name, p in params.items():
        if p.grad is None:
            raise StateError(f"parameter {name!r} has no gradient")
        g = p.grad.astype(np.float64, copy=False)
        m = m_buf.get(name)
        if m is None:
            m = np.zeros(p.data.shape, dtype=np.float64)
            v = np.zeros(p.data.shape, dtype=np.float64)
        else:
            v = v_buf[name]
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_buf[name] = m
        v_buf[name] = v
        upd = lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        p.data = (p.data.astype(np.float64) - upd).astype(p.data.dtype)


def zero_grads(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.grad = None
