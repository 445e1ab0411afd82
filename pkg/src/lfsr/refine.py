"""Joint light-field refinement and the EPI consistency loss.

The per-view super-resolved light field is passed through interleaved
angular/spatial filters that can move information across views, and a
zero-initialized tail turns the result into a residual on the input.
"""
from __future__ import annotations

import numpy as np

from . import numcore as nc
from .errors import DimensionError
from .lightfield import LightField, angular_conv, spatial_conv
from .numcore import Tensor
from .weights import StageWeights, conv_entry, zero_entry

WIDTH = 32


def init_refine_weights(seed) -> StageWeights:
    rng = np.random.default_rng(seed)
    e: dict = {}
    conv_entry(e, rng, "head", WIDTH, 3, 3, 3)
    for i in range(3):
        conv_entry(e, rng, f"inter.{i}.ang", WIDTH, WIDTH, 3, 3)
        conv_entry(e, rng, f"inter.{i}.spa", WIDTH, WIDTH, 3, 3)
    zero_entry(e, "tail", 3, WIDTH, 3, 3)
    return StageWeights("lfrefine", e)


def refine_values(values: Tensor, weights: StageWeights) -> Tensor:
    """Differentiable core on a [U,V,H,W,C] tensor."""
    if weights.stage != "lfrefine":
        raise ValueError(f"weights are for stage {weights.stage!r}, expected 'lfrefine'")
    if values.ndim != 5:
        raise DimensionError(f"expected [U,V,H,W,C] values, got shape {values.shape}")
    u, v, h, w, c = values.shape
    if u != 7 or v != 7:
        raise ValueError(f"refinement needs a 7x7 light field, got {u}x{v}")
    e = weights.entries

    x = nc.reshape(nc.permute(values, (0, 1, 4, 2, 3)), (u * v, c, h, w))
    x = nc.relu(nc.conv2d(x, e["head.weight"], e["head.bias"], pad=1))
    f = nc.permute(nc.reshape(x, (u, v, WIDTH, h, w)), (2, 0, 1, 3, 4))
    for i in range(3):
        f = nc.relu(angular_conv(f, e[f"inter.{i}.ang.weight"], e[f"inter.{i}.ang.bias"]))
        f = nc.relu(spatial_conv(f, e[f"inter.{i}.spa.weight"], e[f"inter.{i}.spa.bias"]))
    x = nc.reshape(nc.permute(f, (1, 2, 0, 3, 4)), (u * v, WIDTH, h, w))
    res = nc.conv2d(x, e["tail.weight"], e["tail.bias"], pad=1)
    residual = nc.permute(nc.reshape(res, (u, v, c, h, w)), (0, 1, 3, 4, 2))
    return nc.clamp01(nc.add(values, residual))


def refine_forward(sr_lf: LightField, weights: StageWeights) -> LightField:
    """clamp(sr_lf + residual, 0, 1) with the residual computed jointly
    over all 49 views."""
    if sr_lf.U != 7 or sr_lf.V != 7:
        raise ValueError(f"refinement needs a 7x7 light field, got {sr_lf.U}x{sr_lf.V}")
    out = refine_values(sr_lf.values, weights)
    return LightField(out.data)


def _epi_terms(pred: Tensor, gt: Tensor):
    # horizontal EPIs (fixed v, y) vary (u, x) -> volume axes 0 and 3;
    # vertical EPIs (fixed u, x) vary (v, y) -> volume axes 1 and 2
    terms = []
    for axis in (0, 3, 1, 2):
        terms.append(nc.sum_(nc.abs_(nc.sub(nc.diff(pred, axis), nc.diff(gt, axis)))))
    return terms


def epi_loss(pred, gt) -> Tensor:
    """Mean absolute gradient difference over every EPI of both
    orientations, forward differences along the angular and spatial axis.

    Each EPI contributes the mean over its gradient elements; the loss is
    the average of those per-EPI means. Accepts LightFields or raw
    [U,V,H,W,C] tensors (the differentiable path used in training).
    """
    pt = pred.values if isinstance(pred, LightField) else pred
    gtv = gt.values if isinstance(gt, LightField) else gt
    if pt.ndim != 5:
        raise DimensionError(f"expected [U,V,H,W,C] values, got shape {pt.shape}")
    if pt.shape != gtv.shape:
        raise DimensionError(f"shape mismatch: {pt.shape} vs {gtv.shape}")
    u, v, h, w, c = pt.shape
    tu, tw, tv, th = _epi_terms(pt, gtv)
    n_hor = (u - 1) * w * c + u * (w - 1) * c  # gradient elements per horizontal EPI family
    n_ver = (v - 1) * h * c + v * (h - 1) * c
    hor = nc.scale(nc.add(tu, tw), 1.0 / n_hor)
    ver = nc.scale(nc.add(tv, th), 1.0 / n_ver)
    return nc.scale(nc.add(hor, ver), 1.0 / (v * h + u * w))
