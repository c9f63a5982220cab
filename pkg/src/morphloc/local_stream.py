"""Local-stream mechanism blocks for facial forgery localization.

These are the deterministic building blocks of the two-stream local
detector: adaptive face cropping, cross-modality consistency
refinement, patch self-attention and recalibration, intra-patch
consistency scores, cosine pseudo-mask generation, and the binary
cross-entropy training losses. Learnable projections are injected as
plain weight matrices so every block is testable without training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .kernels import cosine_map, softmax_rows

__all__ = [
    "Projection",
    "PatchGrid",
    "FaceBox",
    "adaptive_crop",
    "cmce_refine",
    "lfga_attention",
    "lfga_recalibrate",
    "mpff_patch_consistency",
    "sspsl_pseudo_mask",
    "patch_labels",
    "training_losses",
]

_BCE_EPS = 1e-7

# tanh saturates to exactly +/-1.0 in float64 around |z|=19; nudge those
# values one ulp inward so consistency scores stay strictly inside (-1,1).
_TANH_HI = np.nextafter(1.0, 0.0)
_TANH_LO = np.nextafter(-1.0, 0.0)


@dataclass(frozen=True)
class Projection:
    """A linear map applied to per-location feature vectors.

    weights has shape (out_dim, in_dim); bias defaults to zeros.
    """

    weights: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise DimensionError(f"weights must be 2-D, got shape {w.shape}")
        b = self.bias
        b = np.zeros(w.shape[0]) if b is None else np.asarray(b, dtype=np.float64)
        if b.shape != (w.shape[0],):
            raise DimensionError(f"bias shape {b.shape} does not match out_dim {w.shape[0]}")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ParameterError("projection parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def __call__(self, features: np.ndarray) -> np.ndarray:
        """Apply to (..., in_dim) feature vectors, yielding (..., out_dim)."""
        features = np.asarray(features, dtype=np.float64)
        if features.shape[-1] != self.in_dim:
            raise DimensionError(
                f"feature dim {features.shape[-1]} does not match projection in_dim {self.in_dim}"
            )
        return features @ self.weights.T + self.bias

    @classmethod
    def identity(cls, dim: int) -> "Projection":
        return cls(np.eye(dim))

    @classmethod
    def seeded(cls, out_dim: int, in_dim: int, seed: int) -> "Projection":
        """Deterministic init: weights and bias uniform in (-0.1, 0.1)."""
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(-0.1, 0.1, (out_dim, in_dim)), rng.uniform(-0.1, 0.1, out_dim))


@dataclass(frozen=True)
class PatchGrid:
    """Non-overlapping patch tiling of a feature map.

    Maps must divide exactly; callers pad (replicate-pad) beforehand if
    their extents are not multiples of the patch size.
    """

    patch_h: int
    patch_w: int

    def __post_init__(self):
        if self.patch_h < 1 or self.patch_w < 1:
            raise ParameterError(f"patch extents must be >= 1, got {self.patch_h}x{self.patch_w}")

    def check_tiles(self, h: int, w: int) -> tuple[int, int]:
        """Return the grid extents (rows, cols), or raise if not an exact tiling."""
        if h % self.patch_h or w % self.patch_w:
            raise DimensionError(
                f"{self.patch_h}x{self.patch_w} patches do not tile a {h}x{w} map exactly"
            )
        return h // self.patch_h, w // self.patch_w


@dataclass(frozen=True)
class FaceBox:
    """A detected face rectangle inside a source image, in pixels."""

    x: int
    y: int
    w: int
    h: int
    img_h: int
    img_w: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ParameterError(f"degenerate face box {self.w}x{self.h}")
        if self.x < 0 or self.y < 0 or self.x + self.w > self.img_w or self.y + self.h > self.img_h:
            raise ParameterError(
                f"face box ({self.x},{self.y},{self.w},{self.h}) leaves the "
                f"{self.img_h}x{self.img_w} image bounds"
            )

    @property
    def area_fraction(self) -> float:
        return (self.w * self.h) / (self.img_h * self.img_w)


def adaptive_crop(
    image: np.ndarray, box: FaceBox, area_lo: float = 0.04, margin: float = 1.3
) -> np.ndarray:
    """Crop the expanded face box when the face is large enough.

    If the box covers at least ``area_lo`` of the image, the box is
    grown by ``margin`` about its center, clipped to the image bounds,
    and cropped; otherwise the full image is returned unchanged so
    small faces keep their surrounding context.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise DimensionError(f"expected a (C,H,W) image, got shape {image.shape}")
    if not 0.0 < area_lo < 1.0:
        raise ParameterError(f"area_lo must lie in (0,1), got {area_lo}")
    if margin < 1.0:
        raise ParameterError(f"margin must be >= 1, got {margin}")
    _, h, w = image.shape
    if (box.img_h, box.img_w) != (h, w):
        raise DimensionError(
            f"box was built for a {box.img_h}x{box.img_w} image, got {h}x{w}"
        )
    if box.area_fraction < area_lo:
        return image.copy()
    cy = box.y + box.h / 2.0
    cx = box.x + box.w / 2.0
    y0 = max(0, math.floor(cy - box.h * margin / 2.0))
    y1 = min(h, math.ceil(cy + box.h * margin / 2.0))
    x0 = max(0, math.floor(cx - box.w * margin / 2.0))
    x1 = min(w, math.ceil(cx + box.w * margin / 2.0))
    return image[:, y0:y1, x0:x1].copy()


def cmce_refine(f_r: np.ndarray, f_h: np.ndarray) -> np.ndarray:
    """Cross-modality consistency refinement of two feature streams.

    The per-location cosine map Corr between the streams gates how much
    of the other stream is mixed in before the two refinements are
    summed:

        ReLU(F_r + Corr * F_h) + ReLU(F_h + Corr * F_r)

    The operation is exactly symmetric in its arguments and the output
    is elementwise >= 0.
    """
    f_r = np.asarray(f_r, dtype=np.float64)
    f_h = np.asarray(f_h, dtype=np.float64)
    if f_r.shape != f_h.shape or f_r.ndim != 3:
        raise DimensionError(f"streams must share a (C,H,W) shape, got {f_r.shape} vs {f_h.shape}")
    corr = cosine_map(f_r, f_h)[None]
    return np.maximum(f_r + corr * f_h, 0.0) + np.maximum(f_h + corr * f_r, 0.0)


def _locations(features: np.ndarray) -> np.ndarray:
    """(C,H,W) -> (H*W, C) with row-major spatial flattening."""
    c = features.shape[0]
    return features.reshape(c, -1).T


def lfga_attention(f_l: np.ndarray, g: Projection) -> np.ndarray:
    """Self-attention map over spatial locations of a localization feature.

    Every location is projected by ``g``; the pairwise dot products are
    row-softmaxed into an (H*W, H*W) attention matrix whose rows sum
    to 1.
    """
    f_l = np.asarray(f_l, dtype=np.float64)
    if f_l.ndim != 3:
        raise DimensionError(f"expected a (C,H,W) feature, got shape {f_l.shape}")
    if g.in_dim != f_l.shape[0]:
        raise DimensionError(f"projection in_dim {g.in_dim} != channel count {f_l.shape[0]}")
    proj = g(_locations(f_l))
    return softmax_rows(proj @ proj.T)


def lfga_recalibrate(f_c: np.ndarray, att: np.ndarray, h: Projection) -> np.ndarray:
    """Recalibrate a classification feature with an attention map.

    Projects each location by ``h``, right-multiplies the resulting
    (C, H*W) matrix by ``att``, reshapes back to (C,H,W) row-major,
    adds the residual, and applies ReLU.
    """
    f_c = np.asarray(f_c, dtype=np.float64)
    att = np.asarray(att, dtype=np.float64)
    if f_c.ndim != 3:
        raise DimensionError(f"expected a (C,H,W) feature, got shape {f_c.shape}")
    c, height, width = f_c.shape
    n = height * width
    if att.shape != (n, n):
        raise DimensionError(f"attention must be ({n},{n}) for a {height}x{width} map, got {att.shape}")
    if h.in_dim != c or h.out_dim != c:
        raise DimensionError(
            f"projection must map {c} -> {c} channels, got {h.in_dim} -> {h.out_dim}"
        )
    mixed = (h(_locations(f_c)).T @ att).reshape(c, height, width)
    return np.maximum(mixed + f_c, 0.0)


def mpff_patch_consistency(
    f_ml: np.ndarray,
    f_l: np.ndarray,
    grid: PatchGrid,
    theta: Projection,
    c: float | None = None,
) -> np.ndarray:
    """Intra-patch consistency between two resolution levels.

    Each cell of the low-resolution map ``f_l`` owns one patch of the
    high-resolution map ``f_ml``. Both are projected by the shared
    ``theta`` and every high-resolution location j inside patch k is
    scored tanh(<theta(p_k^j), theta(f_l^k)> / c). The normalizer
    defaults to sqrt(theta.out_dim), attention-style. The result is an
    (h2,w2) map with every value strictly inside (-1, 1).
    """
    f_ml = np.asarray(f_ml, dtype=np.float64)
    f_l = np.asarray(f_l, dtype=np.float64)
    if f_ml.ndim != 3 or f_l.ndim != 3:
        raise DimensionError("both feature maps must be (C,H,W) tensors")
    if c is None:
        c = math.sqrt(theta.out_dim)
    if c <= 0:
        raise ParameterError(f"normalizer must be positive, got {c}")
    c2, h2, w2 = f_ml.shape
    c1, h1, w1 = f_l.shape
    if h2 % h1 or w2 % w1:
        raise DimensionError(f"high-res {h2}x{w2} is not an integral multiple of low-res {h1}x{w1}")
    rh, rw = h2 // h1, w2 // w1
    if (grid.patch_h, grid.patch_w) != (rh, rw):
        raise DimensionError(
            f"grid patches {grid.patch_h}x{grid.patch_w} do not match the scale ratio {rh}x{rw}"
        )
    if c1 != c2:
        raise DimensionError(f"shared projection needs matching channels, got {c2} vs {c1}")
    if theta.in_dim != c1:
        raise DimensionError(f"projection in_dim {theta.in_dim} != channel count {c1}")
    high = theta(f_ml.reshape(c2, h2, w2).transpose(1, 2, 0))  # (h2, w2, d)
    low = theta(f_l.transpose(1, 2, 0))  # (h1, w1, d)
    low_expanded = np.repeat(np.repeat(low, rh, axis=0), rw, axis=1)
    scores = np.tanh(np.einsum("hwd,hwd->hw", high, low_expanded) / c)
    return np.clip(scores, _TANH_LO, _TANH_HI)


def sspsl_pseudo_mask(f_f: np.ndarray, f_r: np.ndarray, f_a: np.ndarray) -> np.ndarray:
    """Pseudo ground-truth mask from prototype cosine similarity.

    A location is labeled authentic (0) when its feature is at least as
    close to the real prototype ``f_r`` as to the forged prototype
    ``f_a``; ties go to 0. Returns a boolean (H,W) mask with True =
    manipulated. Invariant under positive rescaling of any input.
    """
    f_f = np.asarray(f_f, dtype=np.float64)
    f_r = np.asarray(f_r, dtype=np.float64)
    f_a = np.asarray(f_a, dtype=np.float64)
    if f_f.ndim != 3:
        raise DimensionError(f"expected a (C,H,W) feature, got shape {f_f.shape}")
    c = f_f.shape[0]
    if f_r.shape != (c,) or f_a.shape != (c,):
        raise DimensionError(f"prototypes must be ({c},) vectors")
    nr = np.linalg.norm(f_r)
    na = np.linalg.norm(f_a)
    if nr == 0.0 or na == 0.0:
        raise ParameterError("prototype vectors must be nonzero")
    norms = np.sqrt(np.einsum("chw,chw->hw", f_f, f_f))
    safe = np.where(norms > 0.0, norms, 1.0)
    sim_real = np.einsum("chw,c->hw", f_f, f_r) / (safe * nr)
    sim_forged = np.einsum("chw,c->hw", f_f, f_a) / (safe * na)
    # zero-norm feature vectors get similarity 0 to both prototypes
    sim_real[norms == 0.0] = 0.0
    sim_forged[norms == 0.0] = 0.0
    return sim_real - sim_forged < 0.0


def patch_labels(mask: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """Collapse a pixel mask to per-patch binary labels.

    A patch is labeled 1 as soon as any of its pixels is set (the
    patch average exceeds 0), else 0.
    """
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise DimensionError(f"expected a 2-D mask, got shape {mask.shape}")
    rows, cols = grid.check_tiles(*mask.shape)
    blocks = mask.astype(bool).reshape(rows, grid.patch_h, cols, grid.patch_w)
    return blocks.any(axis=(1, 3))


def training_losses(
    pred_mask: np.ndarray,
    labels: np.ndarray,
    y_hat: float,
    y: int,
) -> tuple[float, float, float]:
    """Localization BCE, classification BCE, and their sum.

    ``pred_mask`` holds per-patch probabilities matched by binary
    ``labels``; ``y_hat`` is the image-level probability for binary
    label ``y``. Probabilities are clamped to [1e-7, 1 - 1e-7] before
    the logs. Returns (loc, cls, total) with total == loc + cls.
    """
    pred_mask = np.asarray(pred_mask, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if pred_mask.shape != labels.shape:
        raise DimensionError(f"prediction shape {pred_mask.shape} != label shape {labels.shape}")
    if not np.isin(labels, (0.0, 1.0)).all():
        raise ParameterError("patch labels must all be 0 or 1")
    if y not in (0, 1):
        raise ParameterError(f"image label must be 0 or 1, got {y}")
    p = np.clip(pred_mask, _BCE_EPS, 1.0 - _BCE_EPS)
    loc = float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))
    q = min(max(float(y_hat), _BCE_EPS), 1.0 - _BCE_EPS)
    cls = float(-(y * math.log(q) + (1 - y) * math.log(1.0 - q)))
    return loc, cls, loc + cls
