"""Autodiff engine, attention layers, Adam, and checkpoint I/O."""

from .autodiff import (
    NamedParams,
    Tape,
    Tensor,
    add,
    cast,
    concat,
    gather_rows,
    leaky_relu,
    log,
    matmul,
    permute,
    relu,
    reshape,
    scale,
    softmax,
    softmax_masked,
    take_along_last,
    tmean,
    transpose_last2,
    tsum,
    zero_grads,
)
from .adam import AdamState, adam_step, init_adam
from .checkpoint import MAGIC, VERSION, load_checkpoint, save_checkpoint
from .layers import fnn, gat_head, gat_layer, init_uniform, mha

__all__ = [
    "NamedParams", "Tape", "Tensor",
    "add", "cast", "concat", "gather_rows", "leaky_relu", "log", "matmul",
    "permute", "relu", "reshape", "scale", "softmax", "softmax_masked",
    "take_along_last", "tmean", "transpose_last2", "tsum", "zero_grads",
    "AdamState", "adam_step", "init_adam",
    "MAGIC", "VERSION", "load_checkpoint", "save_checkpoint",
    "fnn", "gat_head", "gat_layer", "init_uniform", "mha",
]
