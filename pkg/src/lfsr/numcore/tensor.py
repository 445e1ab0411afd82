"""Dense tensors and a taped reverse-mode gradient engine.

Every differentiable operation appends one node to the active DiffRecord.
backward() walks the nodes in reverse execution order, so no explicit
topological sort is needed: execution order is already topological.
"""
from __future__ import annotations

import contextlib
import itertools
import threading

import numpy as np

from ..errors import StateError

_DTYPES = {"f32": np.float32, "f64": np.float64}
_tls = threading.local()
_record_ids = itertools.count(1)


def set_precision(mode: str) -> None:
    if mode not in _DTYPES:
        raise ValueError(f"unknown precision mode {mode!r}, expected 'f32' or 'f64'")
    _tls.precision = mode


def get_precision() -> str:
    return getattr(_tls, "precision", "f32")


def default_dtype():
    return _DTYPES[get_precision()]


@contextlib.contextmanager
def precision(mode: str):
    """Temporarily switch the active precision mode."""
    prev = get_precision()
    set_precision(mode)
    try:
        yield
    finally:
        set_precision(prev)


def active_record():
    return getattr(_tls, "record", None)


class Tensor:
    """N-dimensional float array, treated as immutable once built.

    grad is populated by backward(); tape_id ties the tensor to the record
    that was active when it was created (None outside any record).
    """

    __slots__ = ("data", "grad", "tape_id")

    def __init__(self, data, dtype=None):
        dt = _DTYPES[dtype] if isinstance(dtype, str) else (dtype or default_dtype())
        self.data = np.array(data, dtype=dt)
        self.grad = None
        rec = active_record()
        self.tape_id = rec.handle if rec is not None else None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.data.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return wrap(self.data.copy(), taped=False)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype.name}, taped={self.tape_id is not None})"

    # operators are wired to the ops module at import time (see ops.py)


def wrap(arr: np.ndarray, taped: bool = True) -> Tensor:
    """Build a tensor around an existing array without copying."""
    t = Tensor.__new__(Tensor)
    t.data = arr
    t.grad = None
    rec = active_record() if taped else None
    t.tape_id = rec.handle if rec is not None else None
    return t


class Node:
    """One recorded operation: output, inputs, and the vector-Jacobian map."""

    __slots__ = ("out", "inputs", "vjp")

    def __init__(self, out, inputs, vjp):
        self.out = out
        self.inputs = inputs
        self.vjp = vjp


class DiffRecord:
    """Ordered record of operations, used as a context manager.

    While active, every op on tensors appends a node. Records may nest;
    only the innermost one captures operations.
    """

    __slots__ = ("nodes", "handle", "_prev")

    def __init__(self):
        self.nodes = []
        self.handle = next(_record_ids)
        self._prev = None

    def __enter__(self):
        self._prev = active_record()
        _tls.record = self
        return self

    def __exit__(self, *exc):
        _tls.record = self._prev
        return False


def record_node(out: Tensor, inputs, vjp) -> None:
    rec = active_record()
    if rec is not None:
        rec.nodes.append(Node(out, tuple(inputs), vjp))


def _absorb(t: Tensor, gi: np.ndarray, incoming: np.ndarray) -> None:
    # First contribution may adopt gi directly, but only if gi is a fresh
    # writable array of the right shape; views of the upstream grad would
    # alias siblings and corrupt later accumulation.
    if t.grad is None:
        if (
            gi is not incoming
            and gi.base is None
            and gi.flags.writeable
            and gi.shape == t.data.shape
            and gi.dtype == t.data.dtype
        ):
            t.grad = gi
        else:
            t.grad = np.array(gi, dtype=t.data.dtype).reshape(t.data.shape)
    else:
        t.grad += gi


def backward(loss: Tensor, record: DiffRecord) -> None:
    """Accumulate d(loss)/d(input) into .grad of every tensor in record.

    The loss must be a scalar produced while the record was active.
    Gradients add up across calls; callers reset them between steps.
    """
    if not isinstance(record, DiffRecord):
        raise StateError("backward() needs the DiffRecord that produced the loss")
    if loss.data.size != 1:
        raise ValueError(f"loss must be scalar, got shape {loss.data.shape}")
    if loss.tape_id != record.handle:
        raise StateError("loss was not produced under the given record")
    if loss.grad is None:
        loss.grad = np.ones_like(loss.data)
    else:
        loss.grad += np.ones_like(loss.data)
    for node in reversed(record.nodes):
        g = node.out.grad
        if g is None:
            continue
        grads = node.vjp(g)
        for t, gi in zip(node.inputs, grads):
            if gi is None:
                continue
            _absorb(t, gi, g)
        # every consumer of node.out has already run, so its grad is spent;
        # dropping it keeps peak memory at one live gradient frontier.
        # Leaves are never a node's output, so their grads persist.
        node.out.grad = None
