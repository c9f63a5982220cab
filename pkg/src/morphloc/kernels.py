"""Dense-tensor numeric primitives shared by every feature module.

Arrays are plain float64 numpy ndarrays with semantic axis order
(channels, height, width). All operations here are pure functions:
they validate their inputs, never mutate them, and keep every output
finite. Conventions that golden tests depend on:

* conv2d is cross-correlation (no kernel flip), the deep-learning
  convention.
* resize_bilinear samples with half-pixel center alignment
  (source coordinate = (i + 0.5) * src/dst - 0.5, clamped to the edge).
* cosine similarity of a zero-norm vector is defined as 0.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError, ParameterError

__all__ = ["conv2d", "cosine_map", "softmax_rows", "resize_bilinear"]


def _as_finite_f64(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ParameterError(f"{name} contains NaN or Inf")
    return arr


def conv2d(inp: np.ndarray, kernels: np.ndarray, pad: str = "same") -> np.ndarray:
    """Cross-correlate a (C,H,W) input with a (K,C,kh,kw) kernel bank.

    pad="same" zero-pads so the spatial extents are preserved;
    pad="valid" keeps only fully-overlapping positions. Kernel extents
    must be odd. Returns a (K,H',W') float64 array.
    """
    inp = _as_finite_f64(inp, "input")
    kernels = _as_finite_f64(kernels, "kernels")
    if inp.ndim != 3:
        raise DimensionError(f"input must be (C,H,W), got shape {inp.shape}")
    if kernels.ndim != 4:
        raise DimensionError(f"kernels must be (K,C,kh,kw), got shape {kernels.shape}")
    c, h, w = inp.shape
    k, kc, kh, kw = kernels.shape
    if kc != c:
        raise DimensionError(f"kernel channels {kc} do not match input channels {c}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise DimensionError(f"kernel extents must be odd, got {kh}x{kw}")
    if pad == "same":
        ph, pw = kh // 2, kw // 2
        inp = np.pad(inp, ((0, 0), (ph, ph), (pw, pw)))
    elif pad == "valid":
        if kh > h or kw > w:
            raise DimensionError(f"kernel {kh}x{kw} larger than input {h}x{w} with pad='valid'")
    else:
        raise ParameterError(f"pad must be 'same' or 'valid', got {pad!r}")
    windows = sliding_window_view(inp, (kh, kw), axis=(1, 2))  # (C, H', W', kh, kw)
    return np.einsum("chwuv,kcuv->khw", windows, kernels)


def cosine_map(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-location cosine similarity of channel vectors.

    Both inputs are (C,H,W) with identical shapes; the result is (H,W)
    with values in [-1, 1]. Locations where either vector has zero norm
    yield 0 so the similarity never produces NaN downstream.
    """
    a = _as_finite_f64(a, "a")
    b = _as_finite_f64(b, "b")
    if a.ndim != 3 or b.ndim != 3 or a.shape != b.shape:
        raise DimensionError(f"inputs must share a (C,H,W) shape, got {a.shape} vs {b.shape}")
    dot = np.einsum("chw,chw->hw", a, b)
    na = np.sqrt(np.einsum("chw,chw->hw", a, a))
    nb = np.sqrt(np.einsum("chw,chw->hw", b, b))
    denom = na * nb
    out = np.zeros(dot.shape)
    nonzero = denom > 0.0
    out[nonzero] = dot[nonzero] / denom[nonzero]
    return np.clip(out, -1.0, 1.0)


def softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a 2-D matrix, max-subtracted for stability.

    Every output row sums to 1 and all entries lie in (0, 1).
    """
    m = _as_finite_f64(m, "matrix")
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def resize_bilinear(t: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a (C,h,w) tensor to (C,out_h,out_w).

    Half-pixel center alignment: target pixel i samples the source at
    (i + 0.5) * src/dst - 0.5, clamped to the valid range. A constant
    input therefore stays constant and outputs never leave the input's
    [min, max] range (up to float rounding).
    """
    t = _as_finite_f64(t, "tensor")
    if t.ndim != 3:
        raise DimensionError(f"expected a (C,h,w) tensor, got shape {t.shape}")
    if out_h < 1 or out_w < 1:
        raise DimensionError(f"target extents must be >= 1, got {out_h}x{out_w}")
    _, h, w = t.shape
    if h < 1 or w < 1:
        raise DimensionError(f"source extents must be >= 1, got {h}x{w}")
    if (out_h, out_w) == (h, w):
        return t.copy()

    sy = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0.0, h - 1.0)
    sx = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(sy).astype(int)
    x0 = np.floor(sx).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None]
    fx = (sx - x0)[None, :]

    # Interpolate rows then columns via v0 + f*(v1 - v0) so each step
    # stays inside [min(v0,v1), max(v0,v1)].
    top = t[:, y0[:, None], x0[None, :]]
    top = top + fx * (t[:, y0[:, None], x1[None, :]] - top)
    bot = t[:, y1[:, None], x0[None, :]]
    bot = bot + fx * (t[:, y1[:, None], x1[None, :]] - bot)
    return top + fy * (bot - top)
