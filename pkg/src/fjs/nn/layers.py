"""Layer forward passes built from autodiff ops.

All layers are functions of (tape, inputs, parameter tensors); shapes
come from the tensors, so the same code runs the full-size policy and
tiny gradient-check configurations.
"""

from __future__ import annotations

import numpy as np

from .autodiff import (
    Tensor,
    add,
    concat,
    gather_rows,
    leaky_relu,
    matmul,
    permute,
    reshape,
    scale,
    softmax,
    softmax_masked,
    transpose_last2,
)


def init_uniform(rng: np.random.Generator, shape, fan_in: int, dtype=np.float32) -> np.ndarray:
    bound = float(np.sqrt(1.0 / fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def _neighbor_lists(adj: np.ndarray):
    """Per-row neighbor column indices in ascending order, padded to the
    maximum degree, plus the matching validity mask."""
    if not isinstance(adj, np.ndarray) or adj.ndim != 2:
        raise TypeError("adjacency must be a 2-d boolean ndarray")
    adj = adj.astype(bool, copy=False)
    dmax = int(adj.sum(axis=1).max(initial=0))
    # stable sort floats the True columns to the front in column order
    idx = np.argsort(~adj, axis=1, kind="stable")[:, :dmax]
    valid = np.take_along_axis(adj, idx, axis=1)
    return np.ascontiguousarray(idx), valid


def gat_head(tape, x: Tensor, adj: np.ndarray, wl: Tensor, wr: Tensor, a: Tensor, slope: float) -> Tensor:
    """One attention head over a boolean adjacency (self-loops included).

    score_ij = a . leaky_relu(x_i wl + x_j wr); weights softmax over
    each node's neighborhood; messages are the wr projections.  Scores
    are evaluated on padded neighbor lists, so cost scales with edges
    rather than node pairs; padded slots get exactly zero attention.
    """
    N = x.data.shape[0]
    H = wl.data.shape[1]
    nbr, valid = _neighbor_lists(adj)
    d = nbr.shape[1]
    xl = matmul(tape, x, wl)
    xr = matmul(tape, x, wr)
    gathered = gather_rows(tape, xr, nbr)
    pair = add(tape, reshape(tape, xl, (N, 1, H)), gathered)
    act = leaky_relu(tape, pair, slope)
    scores = reshape(tape, matmul(tape, act, reshape(tape, a, (H, 1))), (N, d))
    alpha = softmax_masked(tape, scores, valid)
    out = matmul(tape, reshape(tape, alpha, (N, 1, d)), gathered)
    return reshape(tape, out, (N, H))


def gat_layer(tape, x: Tensor, adj: np.ndarray, head_params, combine: str, slope: float) -> Tensor:
    """Multi-head graph attention; combine is 'concat' or 'average'."""
    outs = [gat_head(tape, x, adj, wl, wr, a, slope) for wl, wr, a in head_params]
    if combine == "concat":
        return concat(tape, outs, axis=-1)
    if combine == "average":
        total = outs[0]
        for o in outs[1:]:
            total = add(tape, total, o)
        return scale(tape, total, 1.0 / len(outs))
    raise ValueError(f"combine must be 'concat' or 'average', got {combine!r}")


def mha(tape, x: Tensor, heads: int, head_size: int) -> Tensor:
    """Parameter-free multi-head scaled dot-product self-attention.

    The projection lives in the matrix that produced x; heads are
    slices of its output.  x is [n, heads*head_size] or batched
    [T, n, heads*head_size]; output keeps the input shape.
    """
    d = x.data.shape[-1]
    if d != heads * head_size:
        raise ValueError(f"width {d} != heads {heads} x head_size {head_size}")
    lead = x.data.shape[:-2]
    n = x.data.shape[-2]
    split = reshape(tape, x, lead + (n, heads, head_size))
    rank = split.data.ndim
    # [..., n, h, s] -> [..., h, n, s]
    order = tuple(range(rank - 3)) + (rank - 2, rank - 3, rank - 1)
    q = permute(tape, split, order)
    scores = scale(tape, matmul(tape, q, transpose_last2(tape, q)), 1.0 / np.sqrt(head_size))
    att = matmul(tape, softmax(tape, scores), q)
    merged = permute(tape, att, order)  # the swap is its own inverse
    return reshape(tape, merged, lead + (n, heads * head_size))


def fnn(tape, x: Tensor, w1: Tensor, b1: Tensor, w2: Tensor, slope: float) -> Tensor:
    """Two-layer scoring head: leaky_relu(x w1 + b1) w2, no final bias
    (a shift shared by every logit cannot change the softmax)."""
    h = leaky_relu(tape, add(tape, matmul(tape, x, w1), b1), slope)
    return matmul(tape, h, w2)
