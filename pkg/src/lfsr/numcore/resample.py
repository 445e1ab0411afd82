"""Separable Keys bicubic resampling expressed as dense matrices.

A resize by `scale` along one axis is a matrix A of shape [n_out, n_in]
applied by matmul. Building A once per (n_out, n_in, scale, offset) and
caching it keeps repeated resizes at GEMM speed and makes the operation
exactly reproducible. The same builder drives fractional view shifts in
the synthetic renderer (scale 1, offset d).
"""
from __future__ import annotations

import functools
import math

import numpy as np


def _keys_kernel(s: np.ndarray) -> np.ndarray:
    # Keys cubic with a = -0.5; support (-2, 2), exact zeros at |s| in {1, 2}.
    a = -0.5
    s = np.abs(s)
    near = (a + 2.0) * s**3 - (a + 3.0) * s**2 + 1.0
    far = a * (s**3 - 5.0 * s**2 + 8.0 * s - 4.0)
    return np.where(s < 1.0, near, np.where(s < 2.0, far, 0.0))


def out_extent(n_in: int, scale) -> int:
    return int(math.floor(n_in * float(scale) + 0.5))


@functools.lru_cache(maxsize=256)
def _matrix_cached(n_out: int, n_in: int, scale: float, offset: float, dtype: str) -> np.ndarray:
    # Half-pixel-center mapping; kernel evaluated in f64, rows normalized
    # to sum exactly 1, then cast. Source taps clamp to the edge, which
    # merges their weights onto the border pixel (edge replication).
    i = np.arange(n_out, dtype=np.float64)
    src = (i + 0.5) / scale - 0.5 + offset
    base = np.floor(src)
    frac = src - base
    rel = np.array([-1.0, 0.0, 1.0, 2.0])
    taps = base[:, None].astype(np.int64) + rel.astype(np.int64)[None, :]  # [n_out, 4]
    w = _keys_kernel(frac[:, None] - rel[None, :])
    w /= w.sum(axis=1, keepdims=True)
    np.clip(taps, 0, n_in - 1, out=taps)
    mat = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.repeat(np.arange(n_out), 4)
    np.add.at(mat, (rows, taps.ravel()), w.ravel())
    mat = mat.astype(np.float32) if dtype == "f32" else mat
    mat.setflags(write=False)
    return mat


def resample_matrix(n_out: int, n_in: int, scale, offset=0.0, dtype=np.float32) -> np.ndarray:
    """Dense 1D resampling matrix; read-only, cached."""
    if n_out < 1 or n_in < 1:
        raise ValueError(f"resample extents must be positive, got {n_out}x{n_in}")
    key = "f64" if np.dtype(dtype) == np.float64 else "f32"
    return _matrix_cached(int(n_out), int(n_in), float(scale), float(offset), key)


def resize_chw(img: np.ndarray, scale) -> np.ndarray:
    """Resize a [C,H,W] (or [H,W]) array by `scale` along both spatial axes."""
    h, w = img.shape[-2], img.shape[-1]
    ho, wo = out_extent(h, scale), out_extent(w, scale)
    if ho < 1 or wo < 1:
        raise ValueError(f"scale {scale} collapses {h}x{w} to {ho}x{wo}")
    ah = resample_matrix(ho, h, scale, 0.0, img.dtype)
    aw = resample_matrix(wo, w, scale, 0.0, img.dtype)
    return np.matmul(np.matmul(ah, img), aw.T)


def shift_hw(img: np.ndarray, dy: float, dx: float) -> np.ndarray:
    """Translate a [C,H,W] (or [H,W]) array by (dy, dx) source-space pixels.

    out[y, x] = img[y + dy, x + dx], bicubic off-grid, edges replicated.
    Integer shifts reduce to exact copies because the kernel is exactly
    0/1 on the integer lattice.
    """
    h, w = img.shape[-2], img.shape[-1]
    out = img
    if dy != 0.0:
        out = np.matmul(resample_matrix(h, h, 1.0, dy, img.dtype), out)
    if dx != 0.0:
        out = np.matmul(out, resample_matrix(w, w, 1.0, dx, img.dtype).T)
    return np.array(out, dtype=img.dtype, copy=(out is img))
