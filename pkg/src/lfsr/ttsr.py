"""Reference-based per-view super-resolution.

Query is the bicubically upscaled LR view, key the down/up-cycled
reference, value the reference itself. Relevance between 3×3 feature
patches at the coarsest level picks, for every query position, the most
similar reference patch (hard attention) and how much to trust it (soft
attention). Patches are gathered at all three scales and fused into a
residual over the bicubic baseline.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numcore as nc
from .errors import DimensionError
from .numcore import Tensor
from .weights import StageWeights, conv_entry, zero_entry

WIDTH = 32
N_BLOCKS = 8
# per-level (channels, patch size, stride/pad scale)
_LEVELS = {3: (64, 3, 1), 2: (32, 6, 2), 1: (16, 12, 4)}


@dataclass
class TextureFeatures:
    """Encoder pyramid: lv1 at full reference resolution, lv3 at 1/4."""

    lv1: Tensor
    lv2: Tensor
    lv3: Tensor


@dataclass
class AttentionMaps:
    index_map: np.ndarray  # hard attention, one key position per query
    soft_map: Tensor  # max relevance per query, in [-1, 1]


def init_ttsr_weights(seed) -> StageWeights:
    rng = np.random.default_rng(seed)
    e: dict = {}
    widths = [(3, 16), (16, 16), (16, 32), (32, 32), (32, 64), (64, 64)]
    for i, (ci, co) in enumerate(widths):
        conv_entry(e, rng, f"ext.{i}", co, ci, 3, 3)
    conv_entry(e, rng, "bb.head", WIDTH, 3, 3, 3)
    for i in range(N_BLOCKS):
        conv_entry(e, rng, f"bb.res{i}.c0", WIDTH, WIDTH, 3, 3)
        conv_entry(e, rng, f"bb.res{i}.c1", WIDTH, WIDTH, 3, 3)
    conv_entry(e, rng, "fuse.lv3", WIDTH, WIDTH + 64, 3, 3)
    conv_entry(e, rng, "fuse.lv2", WIDTH, WIDTH + 32, 3, 3)
    conv_entry(e, rng, "fuse.lv1", WIDTH, WIDTH + 16, 3, 3)
    conv_entry(e, rng, "up.0", 128, WIDTH, 3, 3)
    conv_entry(e, rng, "up.1", 128, WIDTH, 3, 3)
    conv_entry(e, rng, "integ.lv2", WIDTH, WIDTH, 1, 1)
    conv_entry(e, rng, "integ.lv1", WIDTH, WIDTH, 1, 1)
    zero_entry(e, "tail", 3, WIDTH, 3, 3)
    return StageWeights("ttsr", e)


def extract_texture_features(image: Tensor, weights: StageWeights) -> TextureFeatures:
    """Three-level pyramid from the shared learnable encoder."""
    if image.ndim != 3:
        raise DimensionError(f"expected [3,H,W] image, got shape {image.shape}")
    if image.shape[1] % 4 or image.shape[2] % 4:
        raise DimensionError(f"extents {image.shape[1:]} not divisible by 4")
    e = weights.entries

    def step(x, i, stride=1):
        return nc.relu(nc.conv2d(x, e[f"ext.{i}.weight"], e[f"ext.{i}.bias"], stride=stride, pad=1))

    x = step(step(image, 0), 1)
    lv1 = x
    x = step(step(x, 2, stride=2), 3)
    lv2 = x
    x = step(step(x, 4, stride=2), 5)
    return TextureFeatures(lv1=lv1, lv2=lv2, lv3=x)


def relevance_embedding(q_feat: Tensor, k_feat: Tensor, eps: float = 1e-12) -> Tensor:
    """Cosine similarity between all 3×3 query and key feature patches."""
    if q_feat.ndim != 3 or k_feat.ndim != 3:
        raise DimensionError("relevance needs rank-3 feature maps")
    if q_feat.shape[0] != k_feat.shape[0]:
        raise DimensionError(
            f"channel mismatch: query {q_feat.shape[0]} vs key {k_feat.shape[0]}"
        )
    qn = nc.normalize_rows(nc.unfold_patches(q_feat, 3, 1, 1), eps)
    kn = nc.normalize_rows(nc.unfold_patches(k_feat, 3, 1, 1), eps)
    return nc.matmul(qn, nc.permute(kn, (1, 0)))


def hard_attention(relevance: Tensor) -> np.ndarray:
    """P(i) = argmax_j r(i,j); ties resolve to the smallest j."""
    return nc.argmax_rows(relevance)


def soft_attention(relevance: Tensor) -> Tensor:
    """S(i) = max_j r(i,j), differentiable through the selected entry."""
    return nc.row_max(relevance)


def transfer_textures(v_feat: TextureFeatures, index_map: np.ndarray) -> TextureFeatures:
    """Gather value patches at the hard-attention positions on every level.

    The index map comes from lv3 patch geometry; lv2/lv1 reuse it with
    patch size and stride scaled 2×/4×, so one lv3 position addresses the
    same image area at each scale. Overlaps average out in the fold.
    """
    out = {}
    for lv, feat in ((3, v_feat.lv3), (2, v_feat.lv2), (1, v_feat.lv1)):
        _, k, s = _LEVELS[lv]
        c, h, w = feat.shape
        # pad scales with the stride so every level keeps the lv3 grid
        rows = nc.unfold_patches(feat, k, s, s)
        if len(index_map) != rows.shape[0]:
            raise DimensionError(
                f"index map has {len(index_map)} entries, lv{lv} grid has {rows.shape[0]}"
            )
        out[lv] = nc.fold_patches(nc.take_rows(rows, index_map), k, s, s, h, w)
    return TextureFeatures(lv1=out[1], lv2=out[2], lv3=out[3])


def ttsr_forward(lr_view: Tensor, reference: Tensor, weights: StageWeights) -> Tensor:
    """Super-resolve one view: clamp(bicubic×4 + fused texture residual)."""
    if weights.stage != "ttsr":
        raise ValueError(f"weights are for stage {weights.stage!r}, expected 'ttsr'")
    if lr_view.ndim != 3 or reference.ndim != 3:
        raise ValueError("lr_view and reference must be [3,h,w] / [3,4h,4w]")
    h, w = lr_view.shape[1:]
    if reference.shape != (lr_view.shape[0], 4 * h, 4 * w):
        raise ValueError(
            f"reference extents {reference.shape} are not 4x the view {lr_view.shape}"
        )
    e = weights.entries

    q_img = nc.bicubic_resize(lr_view, 4)
    k_img = nc.bicubic_resize(nc.bicubic_resize(reference, 0.25), 4)
    q3 = extract_texture_features(q_img, weights).lv3
    k3 = extract_texture_features(k_img, weights).lv3
    rel = relevance_embedding(q3, k3)
    index_map = hard_attention(rel)
    soft = soft_attention(rel)
    t = transfer_textures(extract_texture_features(reference, weights), index_map)

    f = nc.relu(nc.conv2d(lr_view, e["bb.head.weight"], e["bb.head.bias"], pad=1))
    for i in range(N_BLOCKS):
        mid = nc.relu(nc.conv2d(f, e[f"bb.res{i}.c0.weight"], e[f"bb.res{i}.c0.bias"], pad=1))
        f = nc.add(f, nc.conv2d(mid, e[f"bb.res{i}.c1.weight"], e[f"bb.res{i}.c1.bias"], pad=1))

    s_map = nc.reshape(soft, (1, h, w))

    def fuse(feat, transferred, s, lv):
        cat = nc.concat([feat, transferred], axis=0)
        res = nc.relu(nc.conv2d(cat, e[f"fuse.lv{lv}.weight"], e[f"fuse.lv{lv}.bias"], pad=1))
        return nc.add(feat, nc.mul(res, s))

    f = fuse(f, t.lv3, s_map, 3)
    f = nc.relu(nc.pixel_shuffle(nc.conv2d(f, e["up.0.weight"], e["up.0.bias"], pad=1), 2))
    f = nc.relu(nc.conv2d(f, e["integ.lv2.weight"], e["integ.lv2.bias"], pad=0))
    f = fuse(f, t.lv2, nc.repeat_upsample(s_map, 2), 2)
    f = nc.relu(nc.pixel_shuffle(nc.conv2d(f, e["up.1.weight"], e["up.1.bias"], pad=1), 2))
    f = nc.relu(nc.conv2d(f, e["integ.lv1.weight"], e["integ.lv1.bias"], pad=0))
    f = fuse(f, t.lv1, nc.repeat_upsample(s_map, 4), 1)

    residual = nc.conv2d(f, e["tail.weight"], e["tail.bias"], pad=1)
    return nc.clamp01(nc.add(q_img, residual))
