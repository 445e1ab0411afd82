"""Differentiable array primitives.

Forward paths run on plain numpy; each op wraps its result and, when a
DiffRecord is active, appends a node whose vjp maps the output gradient
to input gradients. Convolutions go through im2col and a single GEMM,
chunked so scratch buffers stay within a fixed float budget.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError, StateError
from . import resample
from .tensor import Tensor, record_node, wrap

# scratch ceiling for im2col blocks, in floats
_COL_BUDGET = 1 << 24


def _as_scalar(c) -> float:
    if isinstance(c, Tensor):
        raise TypeError("expected a python scalar, got a Tensor")
    return float(c)


def _check_dtypes(*tensors):
    dt = tensors[0].data.dtype
    for t in tensors[1:]:
        if t.data.dtype != dt:
            raise ValueError(f"mixed dtypes {dt.name} and {t.data.dtype.name}")
    return dt


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, ss) in enumerate(zip(g.shape, shape)) if ss == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _broadcast_ok(a, b):
    try:
        return np.broadcast_shapes(a.data.shape, b.data.shape)
    except ValueError:
        raise DimensionError(f"shapes {a.data.shape} and {b.data.shape} do not broadcast") from None


# ---------------------------------------------------------------- arithmetic

def add(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes(a, b)
    _broadcast_ok(a, b)
    out = wrap(a.data + b.data)
    record_node(out, (a, b), lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)))
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes(a, b)
    _broadcast_ok(a, b)
    out = wrap(a.data - b.data)
    record_node(out, (a, b), lambda g: (_unbroadcast(g, a.data.shape), -_unbroadcast(g, b.data.shape)))
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes(a, b)
    _broadcast_ok(a, b)
    out = wrap(a.data * b.data)
    record_node(
        out,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.data.shape), _unbroadcast(g * a.data, b.data.shape)),
    )
    return out


def scale(a: Tensor, c) -> Tensor:
    c = _as_scalar(c)
    out = wrap(a.data * a.data.dtype.type(c))
    record_node(out, (a,), lambda g: (g * a.data.dtype.type(c),))
    return out


def add_scalar(a: Tensor, c) -> Tensor:
    c = _as_scalar(c)
    out = wrap(a.data + a.data.dtype.type(c))
    record_node(out, (a,), lambda g: (g.copy(),))
    return out


def neg(a: Tensor) -> Tensor:
    return scale(a, -1.0)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes(a, b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError(f"matmul needs rank-2 tensors, got {a.data.shape} and {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(f"matmul inner dims differ: {a.data.shape} @ {b.data.shape}")
    out = wrap(a.data @ b.data)
    record_node(out, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))
    return out


def dot(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes(a, b)
    if a.data.ndim != 1 or b.data.ndim != 1 or a.data.shape != b.data.shape:
        raise DimensionError(f"dot needs equal-length vectors, got {a.data.shape} and {b.data.shape}")
    out = wrap(np.array(a.data @ b.data))
    record_node(out, (a, b), lambda g: (g * b.data, g * a.data))
    return out


# ---------------------------------------------------------------- pointwise

def relu(x: Tensor) -> Tensor:
    out = wrap(np.maximum(x.data, 0))
    record_node(out, (x,), lambda g: (g * (x.data > 0),))
    return out


def clamp01(x: Tensor) -> Tensor:
    """Clamp to [0, 1]; gradient passes only strictly inside the interval."""
    out = wrap(np.clip(x.data, 0.0, 1.0))
    record_node(out, (x,), lambda g: (g * ((x.data > 0.0) & (x.data < 1.0)),))
    return out


def abs_(x: Tensor) -> Tensor:
    out = wrap(np.abs(x.data))
    record_node(out, (x,), lambda g: (g * np.sign(x.data),))
    return out


def sum_(x: Tensor) -> Tensor:
    out = wrap(np.array(x.data.sum()))
    record_node(out, (x,), lambda g: (np.full(x.data.shape, g, dtype=x.data.dtype),))
    return out


def mean(x: Tensor) -> Tensor:
    n = x.data.size
    out = wrap(np.array(x.data.mean()))
    record_node(out, (x,), lambda g: (np.full(x.data.shape, g / n, dtype=x.data.dtype),))
    return out


def diff(x: Tensor, axis: int) -> Tensor:
    """Forward difference x[i+1] - x[i] along one axis."""
    if x.data.shape[axis] < 2:
        raise DimensionError(f"diff needs extent >= 2 along axis {axis}, got shape {x.data.shape}")
    out = wrap(np.diff(x.data, axis=axis))

    def vjp(g):
        gx = np.zeros_like(x.data)
        hi = [slice(None)] * x.data.ndim
        lo = [slice(None)] * x.data.ndim
        hi[axis] = slice(1, None)
        lo[axis] = slice(None, -1)
        gx[tuple(hi)] += g
        gx[tuple(lo)] -= g
        return (gx,)

    record_node(out, (x,), vjp)
    return out


# ---------------------------------------------------------------- structure

def concat(tensors, axis: int = 0) -> Tensor:
    tensors = list(tensors)
    _check_dtypes(*tensors)
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise DimensionError(str(e)) from None
    out = wrap(data)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    record_node(out, tuple(tensors), vjp)
    return out


def permute(x: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(x.data.ndim)):
        raise DimensionError(f"permutation {axes} does not match rank {x.data.ndim}")
    inv = tuple(np.argsort(axes))
    out = wrap(np.ascontiguousarray(x.data.transpose(axes)))
    record_node(out, (x,), lambda g: (np.ascontiguousarray(g.transpose(inv)),))
    return out


def reshape(x: Tensor, shape) -> Tensor:
    out = wrap(x.data.reshape(shape))
    record_node(out, (x,), lambda g: (g.reshape(x.data.shape),))
    return out


def slice_uv(x: Tensor, u: int, v: int) -> Tensor:
    """Pick index (u, v) from the two leading axes."""
    if x.data.ndim < 3:
        raise DimensionError(f"slice_uv needs rank >= 3, got shape {x.data.shape}")
    U, V = x.data.shape[:2]
    if not (0 <= u < U and 0 <= v < V):
        raise ValueError(f"view index ({u}, {v}) outside {U}x{V} grid")
    out = wrap(np.ascontiguousarray(x.data[u, v]))

    def vjp(g):
        gx = np.zeros_like(x.data)
        gx[u, v] = g
        return (gx,)

    record_node(out, (x,), vjp)
    return out


def take_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Gather rows of a rank-2 tensor; idx is a plain int array."""
    if x.data.ndim != 2:
        raise DimensionError(f"take_rows needs rank 2, got shape {x.data.shape}")
    idx = np.asarray(idx)
    if idx.ndim != 1 or not np.issubdtype(idx.dtype, np.integer):
        raise ValueError("row index map must be a 1-D integer array")
    n = x.data.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise StateError(f"row index map references rows outside [0, {n})")
    out = wrap(x.data[idx])

    def vjp(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, idx, g)
        return (gx,)

    record_node(out, (x,), vjp)
    return out


# ------------------------------------------------------------- attention ops

def normalize_rows(x: Tensor, eps: float = 1e-12) -> Tensor:
    """Scale each row of a rank-2 tensor to unit L2 norm.

    Rows with norm <= eps are divided by eps instead, so zero rows stay
    zero and the op never divides by zero.
    """
    if x.data.ndim != 2:
        raise DimensionError(f"normalize_rows needs rank 2, got shape {x.data.shape}")
    norms = np.sqrt((x.data * x.data).sum(axis=1))
    denom = np.maximum(norms, eps)
    y = x.data / denom[:, None]
    out = wrap(y)

    def vjp(g):
        live = norms > eps
        # live rows: d(x/n) pulls out the radial component; clamped rows
        # are a plain 1/eps scaling
        s = (g * y).sum(axis=1, keepdims=True)
        gx = np.where(live[:, None], (g - y * s) / denom[:, None], g / x.data.dtype.type(eps))
        return (gx.astype(x.data.dtype, copy=False),)

    record_node(out, (x,), vjp)
    return out


def argmax_rows(x: Tensor) -> np.ndarray:
    """Row-wise argmax as a plain int array; ties pick the smallest index."""
    if x.data.ndim != 2 or x.data.size == 0:
        raise ValueError(f"argmax_rows needs a non-empty rank-2 tensor, got shape {x.data.shape}")
    return np.argmax(x.data, axis=1)


def row_max(x: Tensor) -> Tensor:
    """Row-wise max of a rank-2 tensor; gradient flows to the argmax entry
    (smallest index on ties)."""
    if x.data.ndim != 2 or x.data.size == 0:
        raise ValueError(f"row_max needs a non-empty rank-2 tensor, got shape {x.data.shape}")
    idx = np.argmax(x.data, axis=1)
    rows = np.arange(x.data.shape[0])
    out = wrap(np.ascontiguousarray(x.data[rows, idx]))

    def vjp(g):
        gx = np.zeros_like(x.data)
        gx[rows, idx] = g
        return (gx,)

    record_node(out, (x,), vjp)
    return out


def repeat_upsample(x: Tensor, r: int) -> Tensor:
    """Nearest-neighbour upsample of [C,H,W] by integer factor r."""
    if x.data.ndim != 3:
        raise DimensionError(f"repeat_upsample needs rank 3, got shape {x.data.shape}")
    if r < 1:
        raise ValueError(f"repeat factor must be >= 1, got {r}")
    c, h, w = x.data.shape
    out = wrap(np.repeat(np.repeat(x.data, r, axis=1), r, axis=2))
    record_node(out, (x,), lambda g: (g.reshape(c, h, r, w, r).sum(axis=(2, 4)),))
    return out


# ------------------------------------------------------------- convolution

def _im2col(x: np.ndarray, k: int, stride: int, pad: int) -> np.ndarray:
    # x [B,C,H,W] -> [B, C*k*k, Ho*Wo], feature order (C, ky, kx).
    # Channel-first layout keeps the copy's inner axis a full image row,
    # which is what makes this usable at 128x128 on one core.
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(x, (k, k), axis=(2, 3))
    if stride > 1:
        win = win[:, :, ::stride, ::stride]
    b, c, ho, wo = win.shape[:4]
    return np.ascontiguousarray(win.transpose(0, 1, 4, 5, 2, 3)).reshape(b, c * k * k, ho * wo)


def _col2im(gcol: np.ndarray, xshape, k: int, stride: int, pad: int, ho: int, wo: int) -> np.ndarray:
    b, c, h, w = xshape
    gp = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=gcol.dtype)
    gc = gcol.reshape(b, c, k, k, ho, wo)
    for dy in range(k):
        for dx in range(k):
            gp[:, :, dy : dy + stride * ho : stride, dx : dx + stride * wo : stride] += gc[
                :, :, dy, dx
            ]
    if pad:
        gp = gp[:, :, pad : pad + h, pad : pad + w]
    return np.ascontiguousarray(gp)


def _conv2d_checks(x: Tensor, w: Tensor, b, stride: int, pad: int):
    if w.data.ndim != 4 or w.data.shape[2] != w.data.shape[3]:
        raise DimensionError(f"kernel must be [Co,Ci,k,k], got {w.data.shape}")
    k = w.data.shape[2]
    if k % 2 == 0:
        raise ValueError(f"kernel extent must be odd, got {k}")
    if stride < 1 or pad < 0:
        raise ValueError(f"invalid stride {stride} or pad {pad}")
    if x.data.ndim not in (3, 4):
        raise DimensionError(f"conv2d input must be rank 3 or 4, got shape {x.data.shape}")
    ci = x.data.shape[-3]
    if ci != w.data.shape[1]:
        raise DimensionError(f"input has {ci} channels, kernel expects {w.data.shape[1]}")
    if b is not None and b.data.shape != (w.data.shape[0],):
        raise DimensionError(f"bias shape {b.data.shape} does not match {w.data.shape[0]} filters")
    h, wd = x.data.shape[-2:]
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wd + 2 * pad - k) // stride + 1
    if ho < 1 or wo < 1:
        raise ValueError(f"kernel {k} with pad {pad} does not fit input {h}x{wd}")
    return k, ho, wo


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, pad: int = 0) -> Tensor:
    """2D cross-correlation. x is [C,H,W] or [B,C,H,W], w is [Co,Ci,k,k]."""
    _check_dtypes(*(t for t in (x, w, b) if t is not None))
    k, ho, wo = _conv2d_checks(x, w, b, stride, pad)
    batched = x.data.ndim == 4
    xd = x.data if batched else x.data[None]
    bsz, c = xd.shape[0], xd.shape[1]
    co = w.data.shape[0]
    wmat = w.data.reshape(co, -1)
    per_sample = ho * wo * c * k * k
    step = max(1, _COL_BUDGET // per_sample)

    out = np.empty((bsz, co, ho * wo), dtype=x.data.dtype)
    for lo in range(0, bsz, step):
        hi = min(lo + step, bsz)
        np.matmul(wmat, _im2col(xd[lo:hi], k, stride, pad), out=out[lo:hi])
    if b is not None:
        out += b.data[:, None]
    res = wrap(out.reshape(bsz, co, ho, wo) if batched else out.reshape(co, ho, wo))

    def vjp(g):
        gmat = g.reshape(bsz, co, ho * wo)
        gw = np.zeros((co, c * k * k), dtype=x.data.dtype)
        gx = np.empty_like(xd)
        for lo in range(0, bsz, step):
            hi = min(lo + step, bsz)
            col = _im2col(xd[lo:hi], k, stride, pad)
            gm = gmat[lo:hi]
            gw += np.matmul(gm, col.transpose(0, 2, 1)).sum(axis=0)
            gx[lo:hi] = _col2im(
                np.matmul(wmat.T, gm), (hi - lo, c) + xd.shape[2:], k, stride, pad, ho, wo
            )
        grads = [gx if batched else gx[0], gw.reshape(w.data.shape)]
        if b is not None:
            grads.append(gmat.sum(axis=(0, 2)))
        return tuple(grads)

    record_node(res, (x, w) if b is None else (x, w, b), vjp)
    return res


def _conv3d_checks(x: Tensor, w: Tensor, b, pad):
    if x.data.ndim != 4:
        raise DimensionError(f"conv3d input must be [C,D,H,W], got shape {x.data.shape}")
    if w.data.ndim != 5:
        raise DimensionError(f"conv3d kernel must be [Co,Ci,kd,kh,kw], got {w.data.shape}")
    if x.data.shape[0] != w.data.shape[1]:
        raise DimensionError(f"input has {x.data.shape[0]} channels, kernel expects {w.data.shape[1]}")
    if any(kk % 2 == 0 for kk in w.data.shape[2:]):
        raise ValueError(f"kernel extents must be odd, got {w.data.shape[2:]}")
    if len(pad) != 3 or any(p < 0 for p in pad):
        raise ValueError(f"pad must be three non-negative ints, got {pad}")
    if b is not None and b.data.shape != (w.data.shape[0],):
        raise DimensionError(f"bias shape {b.data.shape} does not match {w.data.shape[0]} filters")
    outs = tuple(x.data.shape[1 + i] + 2 * pad[i] - w.data.shape[2 + i] + 1 for i in range(3))
    if any(o < 1 for o in outs):
        raise ValueError(f"kernel {w.data.shape[2:]} with pad {pad} does not fit input {x.data.shape[1:]}")
    return outs


def conv3d(x: Tensor, w: Tensor, b: Tensor | None = None, pad=(0, 0, 0)) -> Tensor:
    """3D cross-correlation at stride 1. x is [C,D,H,W], w is [Co,Ci,kd,kh,kw]."""
    _check_dtypes(*(t for t in (x, w, b) if t is not None))
    pad = tuple(pad)
    do, ho, wo = _conv3d_checks(x, w, b, pad)
    c = x.data.shape[0]
    co, _, kd, kh, kw = w.data.shape
    feat = c * kd * kh * kw
    wmat = w.data.reshape(co, feat)

    def padded(arr):
        pd, ph, pw = pad
        if pd or ph or pw:
            return np.pad(arr, ((0, 0), (pd, pd), (ph, ph), (pw, pw)))
        return arr

    xp = padded(x.data)
    win = sliding_window_view(xp, (kd, kh, kw), axis=(1, 2, 3))  # [C,do,ho,wo,kd,kh,kw]
    step = max(1, _COL_BUDGET // (ho * wo * feat))

    def slab_col(lo, hi):
        # [C,n,ho,wo,kd,kh,kw] -> [C,kd,kh,kw,n,ho,wo] -> [feat, n*ho*wo]
        return np.ascontiguousarray(win[:, lo:hi].transpose(0, 4, 5, 6, 1, 2, 3)).reshape(
            feat, (hi - lo) * ho * wo
        )

    out = np.empty((co, do * ho * wo), dtype=x.data.dtype)
    for lo in range(0, do, step):
        hi = min(lo + step, do)
        np.matmul(wmat, slab_col(lo, hi), out=out[:, lo * ho * wo : hi * ho * wo])
    if b is not None:
        out += b.data[:, None]
    res = wrap(out.reshape(co, do, ho, wo))

    def vjp(g):
        gmat = g.reshape(co, do * ho * wo)
        gw = np.zeros((co, feat), dtype=x.data.dtype)
        pd, ph, pw = pad
        gp = np.zeros_like(xp)
        for lo in range(0, do, step):
            hi = min(lo + step, do)
            blk = slab_col(lo, hi)
            gm = gmat[:, lo * ho * wo : hi * ho * wo]
            gw += gm @ blk.T
            gcol = (wmat.T @ gm).reshape(c, kd, kh, kw, hi - lo, ho, wo)
            for dz in range(kd):
                for dy in range(kh):
                    for dx in range(kw):
                        gp[:, lo + dz : hi + dz, dy : dy + ho, dx : dx + wo] += gcol[
                            :, dz, dy, dx
                        ]
        if pd or ph or pw:
            gp = gp[:, pd : pd + x.data.shape[1], ph : ph + x.data.shape[2], pw : pw + x.data.shape[3]]
        grads = [np.ascontiguousarray(gp), gw.reshape(w.data.shape)]
        if b is not None:
            grads.append(gmat.sum(axis=1))
        return tuple(grads)

    record_node(res, (x, w) if b is None else (x, w, b), vjp)
    return res


# ------------------------------------------------------------- resampling

def bicubic_resize(x: Tensor, scale) -> Tensor:
    """Bicubic resize of [C,H,W] by a positive rational factor."""
    if x.data.ndim != 3:
        raise DimensionError(f"bicubic_resize needs [C,H,W], got shape {x.data.shape}")
    if float(scale) <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    h, w = x.data.shape[1:]
    ho, wo = resample.out_extent(h, scale), resample.out_extent(w, scale)
    if ho < 1 or wo < 1:
        raise ValueError(f"scale {scale} collapses {h}x{w}")
    ah = resample.resample_matrix(ho, h, scale, 0.0, x.data.dtype)
    aw = resample.resample_matrix(wo, w, scale, 0.0, x.data.dtype)
    out = wrap(np.matmul(np.matmul(ah, x.data), aw.T))
    record_node(out, (x,), lambda g: (np.matmul(np.matmul(ah.T, g), aw),))
    return out


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Rearrange [C*r*r, H, W] into [C, H*r, W*r] (sub-pixel upsample)."""
    if x.data.ndim != 3:
        raise DimensionError(f"pixel_shuffle needs rank 3, got shape {x.data.shape}")
    if r < 1:
        raise ValueError(f"shuffle factor must be >= 1, got {r}")
    cr, h, w = x.data.shape
    if cr % (r * r):
        raise DimensionError(f"{cr} channels not divisible by r*r = {r * r}")
    c = cr // (r * r)
    out = wrap(
        np.ascontiguousarray(x.data.reshape(c, r, r, h, w).transpose(0, 3, 1, 4, 2)).reshape(
            c, h * r, w * r
        )
    )

    def vjp(g):
        return (
            np.ascontiguousarray(g.reshape(c, h, r, w, r).transpose(0, 2, 4, 1, 3)).reshape(cr, h, w),
        )

    record_node(out, (x,), vjp)
    return out


# ------------------------------------------------------------- patch ops

def _patch_grid(h: int, w: int, k: int, stride: int, pad: int):
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    if ho < 1 or wo < 1:
        raise ValueError(f"patch size {k} with pad {pad} does not fit {h}x{w}")
    return ho, wo


def unfold_patches(x: Tensor, k: int, stride: int, pad: int) -> Tensor:
    """Extract k*k patches of [C,H,W] as rows [N, C*k*k], zero-padded
    borders, positions in row-major scan order."""
    if x.data.ndim != 3:
        raise DimensionError(f"unfold_patches needs [C,H,W], got shape {x.data.shape}")
    if k < 1 or stride < 1 or pad < 0:
        raise ValueError(f"invalid patch geometry k={k} stride={stride} pad={pad}")
    c, h, w = x.data.shape
    ho, wo = _patch_grid(h, w, k, stride, pad)
    out = wrap(np.ascontiguousarray(_im2col(x.data[None], k, stride, pad)[0].T))

    def vjp(g):
        return (_col2im(np.ascontiguousarray(g.T)[None], (1, c, h, w), k, stride, pad, ho, wo)[0],)

    record_node(out, (x,), vjp)
    return out


def fold_patches(p: Tensor, k: int, stride: int, pad: int, h: int, w: int) -> Tensor:
    """Inverse of unfold_patches onto a [C,h,w] canvas; overlapping
    contributions are averaged per pixel, so fold(unfold(x)) == x."""
    if p.data.ndim != 2:
        raise DimensionError(f"fold_patches needs [N,D] rows, got shape {p.data.shape}")
    if k < 1 or stride < 1 or pad < 0:
        raise ValueError(f"invalid patch geometry k={k} stride={stride} pad={pad}")
    n, d = p.data.shape
    if d % (k * k):
        raise DimensionError(f"row width {d} is not a multiple of k*k = {k * k}")
    c = d // (k * k)
    ho, wo = _patch_grid(h, w, k, stride, pad)
    if n != ho * wo:
        raise DimensionError(f"{n} rows do not tile a {ho}x{wo} patch grid")
    ones = np.ones((1, k * k, ho * wo), dtype=np.float64)
    counts = _col2im(ones, (1, 1, h, w), k, stride, pad, ho, wo)[0, 0]
    counts = np.maximum(counts, 1.0)
    # accumulate at 64-bit so a pixel covered by n identical copies folds
    # back to that exact value after the divide
    acc = _col2im(p.data.T.astype(np.float64)[None], (1, c, h, w), k, stride, pad, ho, wo)[0]
    out = wrap((acc / counts).astype(p.data.dtype))
    counts = counts.astype(p.data.dtype)

    def vjp(g):
        return (np.ascontiguousarray(_im2col((g / counts)[None], k, stride, pad)[0].T),)

    record_node(out, (p,), vjp)
    return out


# ------------------------------------------------------------- sugar

Tensor.__add__ = lambda self, o: add(self, o) if isinstance(o, Tensor) else add_scalar(self, o)
Tensor.__radd__ = lambda self, o: add_scalar(self, o)
Tensor.__sub__ = lambda self, o: sub(self, o) if isinstance(o, Tensor) else add_scalar(self, -float(o))
Tensor.__rsub__ = lambda self, o: add_scalar(neg(self), o)
Tensor.__mul__ = lambda self, o: mul(self, o) if isinstance(o, Tensor) else scale(self, o)
Tensor.__rmul__ = lambda self, o: scale(self, o)
Tensor.__truediv__ = lambda self, o: scale(self, 1.0 / float(o))
Tensor.__neg__ = neg
Tensor.__matmul__ = matmul
