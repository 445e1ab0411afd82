"""Tensor core: taped autodiff, convolution, resampling, Adam."""

from .optim import adam_step, new_adam_state, zero_grads
from .ops import (
    abs_,
    add,
    add_scalar,
    argmax_rows,
    bicubic_resize,
    clamp01,
    concat,
    conv2d,
    conv3d,
    diff,
    dot,
    fold_patches,
    matmul,
    mean,
    mul,
    neg,
    normalize_rows,
    permute,
    pixel_shuffle,
    relu,
    repeat_upsample,
    reshape,
    row_max,
    scale,
    slice_uv,
    sub,
    sum_,
    take_rows,
    unfold_patches,
)
from .resample import out_extent, resample_matrix, resize_chw, shift_hw
from .tensor import (
    DiffRecord,
    Tensor,
    backward,
    default_dtype,
    get_precision,
    precision,
    set_precision,
    wrap,
)

__all__ = [
    "DiffRecord",
    "Tensor",
    "abs_",
    "adam_step",
    "add",
    "add_scalar",
    "argmax_rows",
    "backward",
    "bicubic_resize",
    "clamp01",
    "concat",
    "conv2d",
    "conv3d",
    "default_dtype",
    "diff",
    "dot",
    "fold_patches",
    "get_precision",
    "matmul",
    "mean",
    "mul",
    "neg",
    "new_adam_state",
    "normalize_rows",
    "out_extent",
    "permute",
    "pixel_shuffle",
    "precision",
    "relu",
    "repeat_upsample",
    "resample_matrix",
    "resize_chw",
    "row_max",
    "scale",
    "set_precision",
    "shift_hw",
    "slice_uv",
    "sub",
    "sum_",
    "take_rows",
    "unfold_patches",
    "wrap",
    "zero_grads",
]
