"""Mesoscopic multi-scale prediction structure and adaptive fusion.

The trained dual encoders of the mesoscopic branch are replaced by
seeded deterministic stand-ins (fixed convolutions, pooling pyramids,
and a logistic squash) that preserve every shape and range contract of
the real thing, so the weighted-fusion math downstream is exercised
end to end. Branch order is fixed as (l1, g1, l2, g2, l3, g3, l4, g4):
local and global predictions interleaved over four scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .kernels import conv2d, resize_bilinear

__all__ = [
    "ScalePredictions",
    "stub_scale_predictions",
    "merge_predictions",
    "stub_weighting",
    "fuse_weighted",
    "amw_fuse",
]

# Pooling factor per scale; predictions are emitted at 1/4 resolution,
# so scale 1 is native and scales 2-4 are upsampled back.
_SCALE_FACTORS = (4, 8, 16, 32)
_WEIGHT_SUM_TOL = 1e-6


@dataclass(frozen=True)
class ScalePredictions:
    """Eight scale-branch probability maps at 1/4 source resolution."""

    branches: tuple
    src_h: int
    src_w: int

    def __post_init__(self):
        if len(self.branches) != 8:
            raise DimensionError(f"expected 8 branches, got {len(self.branches)}")
        shape = (self.src_h // 4, self.src_w // 4)
        for i, b in enumerate(self.branches):
            if b.shape != shape:
                raise DimensionError(f"branch {i} has shape {b.shape}, expected {shape}")
            if b.min() < 0.0 or b.max() > 1.0:
                raise DimensionError(f"branch {i} leaves [0,1]")


def _avg_pool(x: np.ndarray, factor: int) -> np.ndarray:
    c, h, w = x.shape
    return x.reshape(c, h // factor, factor, w // factor, factor).mean(axis=(2, 4))


def _logistic(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _box_filter(channel: np.ndarray, size: int) -> np.ndarray:
    kernel = np.full((1, 1, size, size), 1.0 / (size * size))
    return conv2d(channel[None], kernel, pad="same")[0]


def stub_scale_predictions(i_h: np.ndarray, i_l: np.ndarray, seed: int) -> ScalePredictions:
    """Deterministic stand-in for the dual encoder/decoder pyramid.

    Local branches come from the high-frequency representation via a
    seeded 3x3 convolution and average pooling per scale; global
    branches come from the low-frequency representation via growing box
    filters. Every branch is squashed to [0,1] by a logistic map and
    upsampled to 1/4 of the source resolution. Zero inputs yield
    constant 0.5 everywhere.
    """
    i_h = np.asarray(i_h, dtype=np.float64)
    i_l = np.asarray(i_l, dtype=np.float64)
    if i_h.ndim != 3 or i_h.shape[0] != 6 or i_l.shape != i_h.shape:
        raise DimensionError(
            f"expected two matching (6,H,W) inputs, got {i_h.shape} and {i_l.shape}"
        )
    _, h, w = i_h.shape
    if h % 32 or w % 32:
        raise DimensionError(f"extents must be divisible by 32, got {h}x{w}")
    rng = np.random.default_rng(seed)
    out_h, out_w = h // 4, w // 4
    gray_low = i_l.mean(axis=0)

    branches = []
    for scale, factor in enumerate(_SCALE_FACTORS, start=1):
        kernel = rng.uniform(-0.1, 0.1, (1, 6, 3, 3))
        local = _logistic(_avg_pool(conv2d(i_h, kernel, pad="same"), factor))
        glob = _logistic(_avg_pool(_box_filter(gray_low, 2 * scale + 1)[None], factor))
        branches.append(np.clip(resize_bilinear(local, out_h, out_w)[0], 0.0, 1.0))
        branches.append(np.clip(resize_bilinear(glob, out_h, out_w)[0], 0.0, 1.0))
    return ScalePredictions(branches=tuple(branches), src_h=h, src_w=w)


def merge_predictions(p: ScalePredictions) -> np.ndarray:
    """Stack the eight branches channel-last, preserving branch order."""
    return np.stack(p.branches, axis=-1)


def stub_weighting(i_concat: np.ndarray, seed: int) -> np.ndarray:
    """Deterministic stand-in for the learned weighting network.

    Takes the 9-channel (image, high, low) stack, applies a seeded
    convolution to 8 channels, pools to 1/4 resolution, and softmaxes
    per pixel so the (H/4, W/4, 8) output lies on the simplex. Zero
    input gives the uniform weighting 1/8.
    """
    i_concat = np.asarray(i_concat, dtype=np.float64)
    if i_concat.ndim != 3 or i_concat.shape[0] != 9:
        raise DimensionError(f"expected a (9,H,W) input, got shape {i_concat.shape}")
    _, h, w = i_concat.shape
    if h % 4 or w % 4:
        raise DimensionError(f"extents must be divisible by 4, got {h}x{w}")
    rng = np.random.default_rng(seed)
    kernels = rng.uniform(-0.1, 0.1, (8, 9, 3, 3))
    logits = _avg_pool(conv2d(i_concat, kernels, pad="same"), 4)  # (8, H/4, W/4)
    logits = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(logits)
    weights = e / e.sum(axis=0, keepdims=True)
    return np.moveaxis(weights, 0, -1)


def _check_weight_map(weights: np.ndarray) -> None:
    if weights.min() < 0.0:
        raise DimensionError("weight map has negative entries")
    sums = weights.sum(axis=-1)
    if np.abs(sums - 1.0).max() > _WEIGHT_SUM_TOL:
        raise DimensionError("weight map rows do not sum to 1")


def fuse_weighted(merged: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Per-pixel convex combination of the stacked branch predictions.

    ``merged`` and ``weights`` are both (h,w,8); the result is the
    (h,w) weighted sum, bounded per pixel by the branch min/max.
    """
    merged = np.asarray(merged, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if merged.ndim != 3 or merged.shape[-1] != 8:
        raise DimensionError(f"merged predictions must be (h,w,8), got {merged.shape}")
    if weights.shape != merged.shape:
        raise DimensionError(f"weight shape {weights.shape} != prediction shape {merged.shape}")
    _check_weight_map(weights)
    return np.einsum("hwk,hwk->hw", merged, weights)


def amw_fuse(merged: np.ndarray, weights: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Adaptive weighted fusion followed by upsampling.

    Fuses the branch stack with the weight map per pixel and resizes
    the result to (out_h, out_w). Output values stay in [0,1].
    """
    fused = fuse_weighted(merged, weights)
    return np.clip(resize_bilinear(fused[None], out_h, out_w)[0], 0.0, 1.0)
