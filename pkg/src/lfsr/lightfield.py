"""4D light-field container: view access, interleaved convolution support,
EPI slicing, degradation, PNG I/O, and PSNR."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import numcore as nc
from .errors import DimensionError, IngestionError
from .numcore import Tensor

_VIEW_RE = re.compile(r"^view_(\d{2})_(\d{2})\.png$")


class LightField:
    """U×V grid of sub-aperture views in one [U,V,H,W,C] tensor.

    Values are clamped to [0,1] on construction and treated as immutable
    afterwards. u indexes rows of the view grid, v columns.
    """

    __slots__ = ("values", "U", "V", "H", "W", "C")

    def __init__(self, values):
        arr = values.data if isinstance(values, Tensor) else np.asarray(values)
        if arr.ndim != 5:
            raise DimensionError(f"light field needs [U,V,H,W,C] values, got shape {arr.shape}")
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(nc.default_dtype())
        self.values = nc.wrap(np.clip(arr, 0.0, 1.0), taped=False)
        self.U, self.V, self.H, self.W, self.C = arr.shape

    @property
    def shape(self):
        return self.values.data.shape

    def __repr__(self):
        return f"LightField({self.U}x{self.V} views, {self.H}x{self.W}x{self.C})"


@dataclass
class EPISlice:
    """One epipolar plane image: a [A,S,C] cut through the light field."""

    orientation: str  # "horizontal" (u,x vary) or "vertical" (v,y vary)
    fixed_angular: int
    fixed_spatial: int
    image: Tensor


def load_lightfield(directory) -> LightField:
    """Read a view_{uu}_{vv}.png directory into a LightField."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestionError(f"{directory} is not a directory")
    found = {}
    for p in directory.iterdir():
        m = _VIEW_RE.match(p.name)
        if m:
            found[(int(m.group(1)), int(m.group(2)))] = p
    if not found:
        raise IngestionError(f"no view_uu_vv.png files in {directory}")
    U = max(u for u, _ in found) + 1
    V = max(v for _, v in found) + 1
    dtype = nc.default_dtype()
    views = np.empty((U, V), dtype=object)
    extent = None
    for u in range(U):
        for v in range(V):
            path = found.get((u, v))
            if path is None:
                raise IngestionError(f"missing view ({u}, {v}) in {directory}")
            arr = np.asarray(Image.open(path).convert("RGB"), dtype=dtype) / dtype(255.0)
            if extent is None:
                extent = arr.shape
            elif arr.shape != extent:
                raise IngestionError(
                    f"view ({u}, {v}) has extents {arr.shape}, expected {extent}"
                )
            views[u, v] = arr
    vol = np.stack([np.stack([views[u, v] for v in range(V)]) for u in range(U)])
    return LightField(vol)


def save_lightfield(lf: LightField, directory) -> None:
    """Write the inverse of load_lightfield (8-bit, round to nearest)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    data = lf.values.data
    for u in range(lf.U):
        for v in range(lf.V):
            img = np.rint(np.clip(data[u, v], 0.0, 1.0) * 255.0).astype(np.uint8)
            if img.shape[-1] == 1:
                img = np.repeat(img, 3, axis=-1)
            Image.fromarray(img, mode="RGB").save(directory / f"view_{u:02d}_{v:02d}.png")


def extract_view(lf: LightField, u: int, v: int) -> Tensor:
    """One sub-aperture view as [C,H,W]."""
    if not (0 <= u < lf.U and 0 <= v < lf.V):
        raise ValueError(f"view index ({u}, {v}) outside {lf.U}x{lf.V} grid")
    return nc.wrap(np.ascontiguousarray(lf.values.data[u, v].transpose(2, 0, 1)), taped=False)


def central_view(lf: LightField) -> Tensor:
    if lf.U % 2 == 0 or lf.V % 2 == 0:
        raise ValueError(f"central view undefined for even grid {lf.U}x{lf.V}")
    return extract_view(lf, (lf.U - 1) // 2, (lf.V - 1) // 2)


def spatial_conv(features: Tensor, kernel: Tensor, bias: Tensor | None = None) -> Tensor:
    """Shape-preserving conv over (H,W) of a [Ch,U,V,H,W] feature field,
    each view independently."""
    if features.ndim != 5:
        raise DimensionError(f"expected [Ch,U,V,H,W] features, got shape {features.shape}")
    ch, u, v, h, w = features.shape
    k = kernel.shape[-1]
    x = nc.reshape(nc.permute(features, (1, 2, 0, 3, 4)), (u * v, ch, h, w))
    y = nc.conv2d(x, kernel, bias, stride=1, pad=k // 2)
    return nc.permute(nc.reshape(y, (u, v, -1, h, w)), (2, 0, 1, 3, 4))


def angular_conv(features: Tensor, kernel: Tensor, bias: Tensor | None = None) -> Tensor:
    """Shape-preserving conv over (U,V) of a [Ch,U,V,H,W] feature field,
    each pixel independently."""
    if features.ndim != 5:
        raise DimensionError(f"expected [Ch,U,V,H,W] features, got shape {features.shape}")
    ch, u, v, h, w = features.shape
    k = kernel.shape[-1]
    x = nc.reshape(nc.permute(features, (3, 4, 0, 1, 2)), (h * w, ch, u, v))
    y = nc.conv2d(x, kernel, bias, stride=1, pad=k // 2)
    return nc.permute(nc.reshape(y, (h, w, -1, u, v)), (2, 3, 4, 0, 1))


def epi_extract(lf: LightField, orientation: str, fixed_angular: int, fixed_spatial: int) -> EPISlice:
    """Cut one EPI out of the light field.

    horizontal: image(u, x, c) = lf(u, fixed_angular, fixed_spatial, x, c)
    vertical:   image(v, y, c) = lf(fixed_angular, v, y, fixed_spatial, c)
    """
    data = lf.values.data
    if orientation == "horizontal":
        if not (0 <= fixed_angular < lf.V and 0 <= fixed_spatial < lf.H):
            raise ValueError(f"EPI indices ({fixed_angular}, {fixed_spatial}) out of range")
        img = data[:, fixed_angular, fixed_spatial, :, :]
    elif orientation == "vertical":
        if not (0 <= fixed_angular < lf.U and 0 <= fixed_spatial < lf.W):
            raise ValueError(f"EPI indices ({fixed_angular}, {fixed_spatial}) out of range")
        img = data[fixed_angular, :, :, fixed_spatial, :]
    else:
        raise ValueError(f"orientation must be 'horizontal' or 'vertical', got {orientation!r}")
    return EPISlice(orientation, fixed_angular, fixed_spatial,
                    nc.wrap(np.ascontiguousarray(img), taped=False))


def degrade_lf(hr: LightField, factor: int) -> LightField:
    """Bicubic 1/factor downsampling of every view; angular grid untouched."""
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if hr.H % factor or hr.W % factor:
        raise ValueError(f"extents {hr.H}x{hr.W} not divisible by {factor}")
    ho, wo = hr.H // factor, hr.W // factor
    out = np.empty((hr.U, hr.V, ho, wo, hr.C), dtype=hr.values.data.dtype)
    for u in range(hr.U):
        for v in range(hr.V):
            chw = np.ascontiguousarray(hr.values.data[u, v].transpose(2, 0, 1))
            out[u, v] = nc.resize_chw(chw, 1.0 / factor).transpose(1, 2, 0)
    return LightField(out)


def psnr(a, b, peak: float = 1.0) -> float:
    """10·log10(peak²/MSE) in dB, capped at 100 (zero MSE maps to the cap)."""
    ad = a.data if isinstance(a, Tensor) else np.asarray(a)
    bd = b.data if isinstance(b, Tensor) else np.asarray(b)
    if ad.shape != bd.shape:
        raise DimensionError(f"psnr needs matching shapes, got {ad.shape} and {bd.shape}")
    mse = float(np.mean((ad.astype(np.float64) - bd.astype(np.float64)) ** 2))
    if mse == 0.0:
        return 100.0
    return min(10.0 * math.log10(peak * peak / mse), 100.0)
