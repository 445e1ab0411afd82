"""Reference generator: 7×7 low-resolution light field in, one 4×
super-resolved central view out.

Head convs run per view, four interleaved angular/spatial filters mix the
view grid, three 3D convs plus a full-depth collapse reduce the 49-view
volume to a single feature map, and two sub-pixel stages lift it 4×. The
tail starts at zero, so a fresh network is exactly the bicubic baseline.
"""
from __future__ import annotations

import numpy as np

from . import numcore as nc
from .lightfield import LightField, angular_conv, central_view, spatial_conv
from .weights import StageWeights, conv_entry, zero_entry

WIDTH = 32


def init_ahqrg_weights(seed) -> StageWeights:
    rng = np.random.default_rng(seed)
    e: dict = {}
    conv_entry(e, rng, "head.0", WIDTH, 3, 3, 3)
    conv_entry(e, rng, "head.1", WIDTH, WIDTH, 3, 3)
    for i in range(4):
        conv_entry(e, rng, f"inter.{i}.ang", WIDTH, WIDTH, 3, 3)
        conv_entry(e, rng, f"inter.{i}.spa", WIDTH, WIDTH, 3, 3)
    for i in range(3):
        conv_entry(e, rng, f"vol.{i}", WIDTH, WIDTH, 3, 3, 3)
    conv_entry(e, rng, "collapse", WIDTH, WIDTH, 49, 1, 1)
    conv_entry(e, rng, "up.0", 128, WIDTH, 3, 3)
    conv_entry(e, rng, "up.1", 128, WIDTH, 3, 3)
    zero_entry(e, "tail", 3, WIDTH, 3, 3)
    return StageWeights("ahqrg", e)


def ahqrg_forward(lr_lf: LightField, weights: StageWeights) -> nc.Tensor:
    """Super-resolve the central view: clamp(bicubic×4 + residual, 0, 1)."""
    if lr_lf.U != 7 or lr_lf.V != 7:
        raise ValueError(f"reference generator needs a 7x7 light field, got {lr_lf.U}x{lr_lf.V}")
    if weights.stage != "ahqrg":
        raise ValueError(f"weights are for stage {weights.stage!r}, expected 'ahqrg'")
    e = weights.entries
    h, w = lr_lf.H, lr_lf.W

    # per-view head over all 49 views at once
    x = nc.wrap(
        np.ascontiguousarray(lr_lf.values.data.transpose(0, 1, 4, 2, 3)).reshape(49, lr_lf.C, h, w),
        taped=False,
    )
    x = nc.relu(nc.conv2d(x, e["head.0.weight"], e["head.0.bias"], pad=1))
    x = nc.relu(nc.conv2d(x, e["head.1.weight"], e["head.1.bias"], pad=1))

    # interleaved angular/spatial filters on the [Ch,U,V,H,W] field
    f = nc.permute(nc.reshape(x, (7, 7, WIDTH, h, w)), (2, 0, 1, 3, 4))
    for i in range(4):
        f = nc.relu(angular_conv(f, e[f"inter.{i}.ang.weight"], e[f"inter.{i}.ang.bias"]))
        f = nc.relu(spatial_conv(f, e[f"inter.{i}.spa.weight"], e[f"inter.{i}.spa.bias"]))

    # treat the 49 views as the depth axis of a volume
    vol = nc.reshape(f, (WIDTH, 49, h, w))
    for i in range(3):
        vol = nc.relu(nc.conv3d(vol, e[f"vol.{i}.weight"], e[f"vol.{i}.bias"], pad=(1, 1, 1)))
    vol = nc.conv3d(vol, e["collapse.weight"], e["collapse.bias"], pad=(0, 0, 0))
    y = nc.reshape(vol, (WIDTH, h, w))

    for i in range(2):
        y = nc.relu(nc.pixel_shuffle(nc.conv2d(y, e[f"up.{i}.weight"], e[f"up.{i}.bias"], pad=1), 2))
    residual = nc.conv2d(y, e["tail.weight"], e["tail.bias"], pad=1)

    base = nc.bicubic_resize(central_view(lr_lf), 4)
    return nc.clamp01(nc.add(base, residual))
