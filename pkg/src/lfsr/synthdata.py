"""Synthetic light fields with known plane disparities.

Each scene is a back-to-front stack of fronto-parallel textured layers.
A layer at disparity d appears in view (u,v) shifted by d·(u-u_c) pixels
horizontally and d·(v-v_c) vertically, sampled with the same Keys bicubic
kernel the rest of the package uses, so integer disparities are exact
pixel shifts and fractional ones are well-defined.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numcore as nc
from .lightfield import LightField, degrade_lf

TEXTURES = ("checkerboard", "smoothed_noise", "gradient")
MAX_DISPARITY = 3.0


@dataclass
class Layer:
    texture: str
    seed: int
    disparity: float
    region: tuple[int, int, int, int] | None = None  # (y0, x0, y1, x1), None = full frame


@dataclass
class SceneSpec:
    layers: list[Layer]  # back to front
    U: int = 7
    V: int = 7
    H: int = 128
    W: int = 128
    seed: int = 0


def _checkerboard(rng, h, w):
    cell = int(rng.integers(4, 17))
    c0 = rng.random(3)
    c1 = rng.random(3)
    py, px = rng.integers(0, cell, size=2)
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    mask = (((yy + py) // cell + (xx + px) // cell) % 2).astype(np.float64)
    return c0 + mask[:, :, None] * (c1 - c0)


def _box1d(a, r, axis):
    # running mean of width 2r+1 with edge padding
    width = [(0, 0)] * a.ndim
    width[axis] = (r, r)
    ap = np.pad(a, width, mode="edge")
    c = np.cumsum(ap, axis=axis, dtype=np.float64)
    lead = [slice(None)] * a.ndim
    lag = [slice(None)] * a.ndim
    lead[axis] = slice(2 * r + 1, None)
    lag[axis] = slice(None, -(2 * r + 1))
    first = [slice(None)] * a.ndim
    first[axis] = slice(2 * r, 2 * r + 1)
    head = c[tuple(first)]
    body = c[tuple(lead)] - c[tuple(lag)]
    return np.concatenate([head, body], axis=axis) / (2 * r + 1)


def _smoothed_noise(rng, h, w):
    a = rng.random((h, w, 3))
    r = int(rng.integers(2, 6))
    for _ in range(2):
        a = _box1d(_box1d(a, r, 0), r, 1)
    lo = a.min(axis=(0, 1), keepdims=True)
    hi = a.max(axis=(0, 1), keepdims=True)
    return (a - lo) / np.maximum(hi - lo, 1e-9)


def _gradient(rng, h, w):
    ang = rng.uniform(0, 2 * np.pi)
    dy, dx = np.sin(ang), np.cos(ang)
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    t = yy * dy + xx * dx
    t = (t - t.min()) / max(t.max() - t.min(), 1e-9)
    c0 = rng.random(3)
    c1 = rng.random(3)
    return c0 + t[:, :, None] * (c1 - c0)


_TEXTURE_FNS = {"checkerboard": _checkerboard, "smoothed_noise": _smoothed_noise, "gradient": _gradient}


def render_texture(layer: Layer, h: int, w: int) -> np.ndarray:
    fn = _TEXTURE_FNS.get(layer.texture)
    if fn is None:
        raise ValueError(f"unknown texture {layer.texture!r}, expected one of {TEXTURES}")
    return np.clip(fn(np.random.default_rng(layer.seed), h, w), 0.0, 1.0)


def synthesize_lf(spec: SceneSpec) -> LightField:
    """Render all U×V views of the scene; deterministic given the spec."""
    if not spec.layers:
        raise ValueError("scene needs at least one layer")
    for layer in spec.layers:
        if abs(layer.disparity) > MAX_DISPARITY:
            raise ValueError(f"disparity {layer.disparity} exceeds +/-{MAX_DISPARITY}")
    if spec.layers[0].region is not None:
        raise ValueError("the back layer must cover the full frame")
    uc, vc = (spec.U - 1) / 2.0, (spec.V - 1) / 2.0
    textures = [render_texture(layer, spec.H, spec.W) for layer in spec.layers]
    out = np.empty((spec.U, spec.V, spec.H, spec.W, 3), dtype=np.float64)
    for u in range(spec.U):
        for v in range(spec.V):
            frame = None
            for layer, tex in zip(spec.layers, textures):
                dx = layer.disparity * (u - uc)
                dy = layer.disparity * (v - vc)
                # shift_hw works on trailing [H,W]; move channels first
                shifted = nc.shift_hw(tex.transpose(2, 0, 1), dy, dx).transpose(1, 2, 0)
                if frame is None:
                    frame = shifted.copy()
                else:
                    y0, x0, y1, x1 = layer.region
                    # the patch itself moves opposite to the sampling shift
                    ry0 = int(np.clip(round(y0 - dy), 0, spec.H))
                    ry1 = int(np.clip(round(y1 - dy), 0, spec.H))
                    rx0 = int(np.clip(round(x0 - dx), 0, spec.W))
                    rx1 = int(np.clip(round(x1 - dx), 0, spec.W))
                    frame[ry0:ry1, rx0:rx1] = shifted[ry0:ry1, rx0:rx1]
            out[u, v] = frame
    return LightField(np.clip(out, 0.0, 1.0).astype(nc.default_dtype()))


def random_scene(rng, h: int, w: int, seed: int) -> SceneSpec:
    """One scene from the training distribution: 1-3 layers, mixed
    integer and fractional disparities."""
    n_layers = int(rng.integers(1, 4))
    layers = []
    for i in range(n_layers):
        d = float(rng.uniform(-2.5, 2.5))
        if rng.random() < 0.5:
            d = float(round(d))
        region = None
        if i > 0:
            hh = int(rng.integers(h // 4, 3 * h // 4))
            ww = int(rng.integers(w // 4, 3 * w // 4))
            y0 = int(rng.integers(0, h - hh))
            x0 = int(rng.integers(0, w - ww))
            region = (y0, x0, y0 + hh, x0 + ww)
        layers.append(
            Layer(
                texture=TEXTURES[int(rng.integers(0, len(TEXTURES)))],
                seed=int(rng.integers(0, 2**31)),
                disparity=d,
                region=region,
            )
        )
    return SceneSpec(layers=layers, U=7, V=7, H=h, W=w, seed=seed)


def make_dataset(n_scenes: int, geometry: tuple[int, int], seed: int):
    """n_scenes (hr, lr) pairs at the given (H, W); lr is the 4× bicubic
    degradation of hr. Deterministic given seed."""
    h, w = geometry
    if h % 4 or w % 4:
        raise ValueError(f"geometry {h}x{w} not divisible by 4")
    rng = np.random.default_rng(seed)
    pairs = []
    for k in range(n_scenes):
        spec = random_scene(rng, h, w, seed=k)
        hr = synthesize_lf(spec)
        pairs.append((hr, degrade_lf(hr, 4)))
    return pairs
