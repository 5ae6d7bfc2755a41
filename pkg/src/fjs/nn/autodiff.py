"""Minimal reverse-mode autodiff on numpy arrays.

Ops are free functions taking the tape as first argument; pass
tape=None for a forward-only evaluation.  Every op appends a backward
closure to the tape, and Tape.backward replays them in reverse
recording order (reverse topological order by construction).  Ops
preserve the input dtype, so the same graph code runs in float32 for
training and float64 for gradient checks.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = np.asarray(data, dtype=dtype)
        self.grad = None
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


NamedParams = dict


class Tape:
    """Recorded backward closures, replayed last-to-first."""

    def __init__(self):
        self._ops: list = []

    def record(self, fn) -> None:
        self._ops.append(fn)

    def backward(self, loss: Tensor) -> None:
        if loss.data.size != 1:
            raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
        loss.grad = np.ones_like(loss.data)
        for fn in reversed(self._ops):
            fn()

    def __len__(self) -> int:
        return len(self._ops)


def _accum(t: Tensor, g) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gd, sd) in enumerate(zip(g.shape, shape)) if sd == 1 and gd != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _make(data, inputs) -> Tensor:
    out = Tensor(data, requires_grad=any(t.requires_grad for t in inputs))
    return out


def _wants(tape, out: Tensor) -> bool:
    return tape is not None and out.requires_grad


def matmul(tape, a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ValueError(f"matmul needs >=2-D operands, got {a.data.ndim}-D @ {b.data.ndim}-D")
    out = _make(a.data @ b.data, (a, b))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                _accum(a, _unbroadcast(g @ b.data.swapaxes(-1, -2), a.data.shape))
            if b.requires_grad:
                _accum(b, _unbroadcast(a.data.swapaxes(-1, -2) @ g, b.data.shape))
        tape.record(backward)
    return out


def add(tape, a: Tensor, b: Tensor) -> Tensor:
    out = _make(a.data + b.data, (a, b))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            _accum(a, _unbroadcast(g, a.data.shape))
            _accum(b, _unbroadcast(g, b.data.shape))
        tape.record(backward)
    return out


def concat(tape, tensors, axis: int = -1) -> Tensor:
    out = _make(np.concatenate([t.data for t in tensors], axis=axis), tensors)
    if _wants(tape, out):
        sizes = [t.data.shape[axis] for t in tensors]
        bounds = np.cumsum([0] + sizes)
        def backward():
            g = out.grad
            if g is None:
                return
            for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                _accum(t, g[tuple(idx)])
        tape.record(backward)
    return out


def gather_rows(tape, x: Tensor, idx) -> Tensor:
    """out = x[idx] along the first axis; idx is any integer array."""
    idx = np.asarray(idx)
    out = _make(x.data[idx], (x,))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            full = np.zeros_like(x.data)
            np.add.at(full, idx, g)
            _accum(x, full)
        tape.record(backward)
    return out


def take_along_last(tape, x: Tensor, idx) -> Tensor:
    """out[..., ] = x[..., idx[...]]; idx shaped like x minus last axis."""
    idx = np.asarray(idx)
    picked = np.take_along_axis(x.data, idx[..., None], axis=-1)[..., 0]
    out = _make(picked, (x,))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            full = np.zeros_like(x.data)
            # one index per row, so put does not lose accumulations
            np.put_along_axis(full, idx[..., None], g[..., None], axis=-1)
            _accum(x, full)
        tape.record(backward)
    return out


def leaky_relu(tape, x: Tensor, slope: float) -> Tensor:
    out = _make(np.where(x.data > 0, x.data, x.data * x.data.dtype.type(slope)), (x,))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            _accum(x, np.where(x.data > 0, g, g * x.data.dtype.type(slope)))
        tape.record(backward)
    return out


def relu(tape, x: Tensor) -> Tensor:
    out = _make(np.maximum(x.data, 0), (x,))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            _accum(x, np.where(x.data > 0, g, 0))
        tape.record(backward)
    return out


def _softmax(tape, x: Tensor, mask) -> Tensor:
    vals = x.data
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), vals.shape)
        if not mask.any(axis=-1).all():
            raise ValueError("softmax over a fully masked row")
        vals = np.where(mask, vals, -np.inf)
    shifted = vals - vals.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=-1, keepdims=True)
    out = _make(p, (x,))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            inner = (g * p).sum(axis=-1, keepdims=True)
            _accum(x, p * (g - inner))
        tape.record(backward)
    return out


def softmax(tape, x: Tensor) -> Tensor:
    return _softmax(tape, x, None)


def softmax_masked(tape, x: Tensor, mask) -> Tensor:
    """Softmax along the last axis; masked entries get exactly 0."""
    return _softmax(tape, x, mask)


def log(tape, x: Tensor) -> Tensor:
    out = _make(np.log(x.data), (x,))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            _accum(x, g / x.data)
        tape.record(backward)
    return out


def tsum(tape, x: Tensor) -> Tensor:
    out = _make(x.data.sum(), (x,))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            _accum(x, np.broadcast_to(g, x.data.shape).astype(x.data.dtype, copy=False))
        tape.record(backward)
    return out


def tmean(tape, x: Tensor) -> Tensor:
    return scale(tape, tsum(tape, x), 1.0 / x.data.size)


def scale(tape, x: Tensor, s: float) -> Tensor:
    out = _make(x.data * x.data.dtype.type(s), (x,))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            _accum(x, g * x.data.dtype.type(s))
        tape.record(backward)
    return out


def reshape(tape, x: Tensor, shape) -> Tensor:
    out = _make(x.data.reshape(shape), (x,))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            _accum(x, g.reshape(x.data.shape))
        tape.record(backward)
    return out


def permute(tape, x: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    out = _make(x.data.transpose(axes), (x,))
    if _wants(tape, out):
        inverse = tuple(np.argsort(axes))
        def backward():
            g = out.grad
            if g is None:
                return
            _accum(x, g.transpose(inverse))
        tape.record(backward)
    return out


def transpose_last2(tape, x: Tensor) -> Tensor:
    axes = list(range(x.data.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return permute(tape, x, axes)


def cast(tape, x: Tensor, dtype) -> Tensor:
    out = _make(x.data.astype(dtype), (x,))
    if _wants(tape, out):
        def backward():
            g = out.grad
            if g is None:
                return
            _accum(x, g.astype(x.data.dtype))
        tape.record(backward)
    return out


def zero_grads(params) -> None:
    for t in params.values():
        t.grad = None
