"""Frequency-domain feature enhancement and SRM noise residuals.

Two ingredients feed the downstream streams: a DCT-based split of an
image into complementary low/high frequency bands (used to build the
6-channel enhanced representations), and a bank of three fixed
high-pass SRM filters that expose noise residuals disturbed by
splicing or synthesis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

from .errors import DimensionError, ParameterError
from .kernels import conv2d

__all__ = [
    "FrequencySplit",
    "dct2",
    "idct2",
    "frequency_split",
    "freq_concat",
    "srm_residual",
]

# ITU-R BT.601 luma weights for the grayscale conversion ahead of SRM
# filtering.
_LUMA = np.array([0.299, 0.587, 0.114])

# The standard three-kernel SRM subset used throughout manipulation
# detection: a first-order difference, the 3x3 second-order residual,
# and the 5x5 KV kernel. Each comes with its quantization normalizer;
# normalized residuals are truncated to [-SRM_TRUNCATION, +SRM_TRUNCATION].
SRM_TRUNCATION = 2.0
_SRM_FIRST_ORDER = (
    np.array(
        [
            [0.0, 0.0, 0.0],
            [0.0, -1.0, 1.0],
            [0.0, 0.0, 0.0],
        ]
    ),
    2.0,
)
_SRM_SECOND_ORDER = (
    np.array(
        [
            [-1.0, 2.0, -1.0],
            [2.0, -4.0, 2.0],
            [-1.0, 2.0, -1.0],
        ]
    ),
    4.0,
)
_SRM_KV = (
    np.array(
        [
            [-1.0, 2.0, -2.0, 2.0, -1.0],
            [2.0, -6.0, 8.0, -6.0, 2.0],
            [-2.0, 8.0, -12.0, 8.0, -2.0],
            [2.0, -6.0, 8.0, -6.0, 2.0],
            [-1.0, 2.0, -2.0, 2.0, -1.0],
        ]
    ),
    12.0,
)
SRM_KERNELS = (_SRM_FIRST_ORDER, _SRM_SECOND_ORDER, _SRM_KV)


@dataclass(frozen=True)
class FrequencySplit:
    """Complementary low/high frequency components of an image.

    ``high + low`` reconstructs the source within float error because
    the DCT coefficients are partitioned exactly and the inverse
    transform is linear.
    """

    high: np.ndarray
    low: np.ndarray
    cutoff: float


def dct2(channel: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D type-II DCT of a single (H,W) channel."""
    channel = np.asarray(channel, dtype=np.float64)
    if channel.ndim != 2:
        raise DimensionError(f"expected a 2-D channel, got shape {channel.shape}")
    return dctn(channel, type=2, norm="ortho")


def idct2(coeffs: np.ndarray) -> np.ndarray:
    """Inverse (type-III) transform; idct2(dct2(x)) == x within 1e-9."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 2:
        raise DimensionError(f"expected a 2-D coefficient grid, got shape {coeffs.shape}")
    return idctn(coeffs, type=2, norm="ortho")


def _low_band_mask(h: int, w: int, cutoff: float) -> np.ndarray:
    """Coefficients whose normalized radial index falls in the low band."""
    u = np.arange(h)[:, None] / h
    v = np.arange(w)[None, :] / w
    radius = np.sqrt(u * u + v * v)
    return radius <= cutoff * np.sqrt(2.0)


def frequency_split(x: np.ndarray, cutoff: float) -> FrequencySplit:
    """Split a (C,H,W) image into low/high DCT bands per channel.

    Coefficients with normalized radial index sqrt((u/H)^2 + (v/W)^2)
    up to cutoff*sqrt(2) form the low band; the rest form the high
    band. Both bands are inverse-transformed back to the pixel domain,
    so high + low reconstructs the input.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise DimensionError(f"expected a (C,H,W) image, got shape {x.shape}")
    if not 0.0 < cutoff < 1.0:
        raise ParameterError(f"cutoff must lie in (0,1), got {cutoff}")
    _, h, w = x.shape
    mask = _low_band_mask(h, w, cutoff)
    low = np.empty_like(x)
    high = np.empty_like(x)
    for c in range(x.shape[0]):
        coeffs = dct2(x[c])
        low[c] = idct2(np.where(mask, coeffs, 0.0))
        high[c] = idct2(np.where(mask, 0.0, coeffs))
    return FrequencySplit(high=high, low=low, cutoff=float(cutoff))


def freq_concat(x: np.ndarray, comp: np.ndarray) -> np.ndarray:
    """Stack an image and a frequency component along the channel axis.

    For a 3-channel input this builds the 6-channel enhanced
    representation consumed by the scale-branch encoders.
    """
    x = np.asarray(x, dtype=np.float64)
    comp = np.asarray(comp, dtype=np.float64)
    if x.ndim != 3 or comp.ndim != 3:
        raise DimensionError("both inputs must be (C,H,W) tensors")
    if x.shape[1:] != comp.shape[1:]:
        raise DimensionError(f"spatial shapes differ: {x.shape[1:]} vs {comp.shape[1:]}")
    return np.concatenate([x, comp], axis=0)


def srm_residual(x: np.ndarray, value_range: float = 255.0) -> np.ndarray:
    """Three-channel SRM noise residual of a (3,H,W) RGB image.

    The image is converted to grayscale, rescaled to the 8-bit value
    domain (``value_range`` is the nominal maximum of the input, 255
    or 1), then filtered with the three fixed high-pass kernels using
    edge-replicated same-padding, so flat regions produce exactly zero
    residual out to the borders. Each residual is divided by its
    kernel's normalizer and truncated to [-2, 2].
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != 3:
        raise DimensionError(f"expected a (3,H,W) image, got shape {x.shape}")
    if value_range <= 0:
        raise ParameterError(f"value_range must be positive, got {value_range}")
    gray = np.einsum("c,chw->hw", _LUMA, x) * (255.0 / value_range)
    out = np.empty((len(SRM_KERNELS),) + gray.shape)
    for i, (kernel, normalizer) in enumerate(SRM_KERNELS):
        r = kernel.shape[0] // 2
        padded = np.pad(gray, r, mode="edge")
        resp = conv2d(padded[None], kernel[None, None], pad="valid")[0]
        out[i] = np.clip(resp / normalizer, -SRM_TRUNCATION, SRM_TRUNCATION)
    return out
