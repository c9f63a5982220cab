"""Binary mathematical morphology and the mask fusion rules.

Masks are 2-D boolean arrays (True = manipulated pixel). Everything
outside the image is background: dilation never creates pixels beyond
the image bounds and erosion fails containment where the structuring
element overhangs the border, so borders erode.

Dilation follows the set definition {z | (B^)_z intersects M} with B^
the reflection of B, i.e. the Minkowski sum {m + b}; erosion is
{z | (B)_z subset of M}. For the default all-ones elements the
reflection is a no-op. The fusion rule dilates the local-branch mask
(reconnecting fragmented regions), erodes the mesoscopic mask
(suppressing over-extension), and unions the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "StructuringElement",
    "dilate",
    "erode",
    "mdmf_fuse",
    "naive_fuse",
    "binarize",
]


@dataclass(frozen=True)
class StructuringElement:
    """Small odd-extent binary probe with its origin at the center cell."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2:
            raise DimensionError(f"structuring element must be 2-D, got shape {bits.shape}")
        h, w = bits.shape
        if h % 2 == 0 or w % 2 == 0:
            raise ParameterError(f"structuring element extents must be odd, got {h}x{w}")
        if not bits[h // 2, w // 2]:
            raise ParameterError("structuring element origin (center cell) must be set")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def ones(cls, size: int) -> "StructuringElement":
        """All-ones square element; size 5 is the default fusion probe."""
        return cls(np.ones((size, size), dtype=bool))

    def offsets(self) -> np.ndarray:
        """Set cells as (dy,dx) displacements from the origin."""
        h, w = self.bits.shape
        ys, xs = np.nonzero(self.bits)
        return np.stack([ys - h // 2, xs - w // 2], axis=1)

    def reflected(self) -> "StructuringElement":
        """180-degree rotation about the origin."""
        return StructuringElement(self.bits[::-1, ::-1])


def _check_mask(mask: np.ndarray, name: str = "mask") -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {mask.shape}")
    return mask.astype(bool)


def _shift(mask: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Translate a mask by (dy,dx), filling the vacated cells with 0."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    ys = slice(max(dy, 0), min(h + dy, h))
    xs = slice(max(dx, 0), min(w + dx, w))
    src_ys = slice(max(-dy, 0), min(h - dy, h))
    src_xs = slice(max(-dx, 0), min(w - dx, w))
    out[ys, xs] = mask[src_ys, src_xs]
    return out


def dilate(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Dilation: union of the mask translated by every set cell of B."""
    mask = _check_mask(mask)
    out = np.zeros_like(mask)
    for dy, dx in se.offsets():
        out |= _shift(mask, dy, dx)
    return out


def erode(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Erosion: pixels where B translated there fits entirely in the mask."""
    mask = _check_mask(mask)
    out = np.ones_like(mask)
    for dy, dx in se.offsets():
        out &= _shift(mask, -dy, -dx)
    return out


def mdmf_fuse(
    m_lfdl: np.ndarray, m_mitl: np.ndarray, se: StructuringElement
) -> np.ndarray:
    """Morphology-driven fusion: dilate(local) OR erode(mesoscopic)."""
    m_lfdl = _check_mask(m_lfdl, "local mask")
    m_mitl = _check_mask(m_mitl, "mesoscopic mask")
    if m_lfdl.shape != m_mitl.shape:
        raise DimensionError(f"mask extents differ: {m_lfdl.shape} vs {m_mitl.shape}")
    return dilate(m_lfdl, se) | erode(m_mitl, se)


def naive_fuse(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Baseline fusion: pixel-wise logical OR."""
    m1 = _check_mask(m1, "first mask")
    m2 = _check_mask(m2, "second mask")
    if m1.shape != m2.shape:
        raise DimensionError(f"mask extents differ: {m1.shape} vs {m2.shape}")
    return m1 | m2


def binarize(prob: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Threshold a probability map; pixels >= threshold are set."""
    prob = np.asarray(prob, dtype=np.float64)
    if prob.ndim != 2:
        raise DimensionError(f"expected a 2-D probability map, got shape {prob.shape}")
    if not 0.0 < threshold < 1.0:
        raise ParameterError(f"threshold must lie in (0,1), got {threshold}")
    return prob >= threshold
