"""Synthetic degradation corpus for desk-scale fusion ablations.

Starting from ground-truth masks, this simulates the two branch error
modes the fusion strategy is designed to repair: the local branch
under-covers (eroded, fragmented, holed masks) while the mesoscopic
branch over-extends (dilated masks plus spurious blobs). Detection
scores are drawn in well-separated bands around 0.9 (manipulated) and
0.1 (authentic). Images whose ground truth is empty get empty
simulated masks: the degradations model errors on detected tampering,
and authentic inputs keep both branches quiet.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DataIOError, ParameterError
from .mask_io import list_masks, load_mask, save_mask, save_scores
from .metrics import DetectionSample
from .morphology import StructuringElement, dilate, erode

__all__ = ["SynthParams", "synth_corpus"]

# Fixed hole-punching geometry for the fragmented local masks.
_HOLE_COUNT = 3
_HOLE_SIZE = 3
_SCORE_NOISE = 0.05

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class SynthParams:
    """Degradation knobs for the simulated branch outputs."""

    seed: int = 42
    lfdl_erosion_radius: int = 2
    lfdl_drop_prob: float = 0.3
    mitl_dilation_radius: int = 3
    mitl_blob_count: int = 2
    mitl_blob_size: int = 5

    def __post_init__(self):
        if self.lfdl_erosion_radius < 0 or self.mitl_dilation_radius < 0:
            raise ParameterError("degradation radii must be >= 0")
        if not 0.0 <= self.lfdl_drop_prob <= 1.0:
            raise ParameterError(f"drop probability must lie in [0,1], got {self.lfdl_drop_prob}")
        if self.mitl_blob_count < 0 or self.mitl_blob_size < 1:
            raise ParameterError("blob count must be >= 0 and blob size >= 1")


def _as_binary(mask: np.ndarray) -> np.ndarray:
    return mask if mask.dtype == bool else mask >= 0.5


def _degrade_lfdl(gt: np.ndarray, params: SynthParams, rng) -> np.ndarray:
    """Under-covering simulation: erode, drop components, punch holes.

    With both knobs at zero the mask passes through untouched (identity
    degradation); holes belong to the fragmentation simulation and are
    only punched when it is active.
    """
    active = params.lfdl_erosion_radius > 0 or params.lfdl_drop_prob > 0.0
    sim = gt.copy()
    if params.lfdl_erosion_radius > 0 and sim.any():
        sim = erode(sim, StructuringElement.ones(2 * params.lfdl_erosion_radius + 1))
    if sim.any() and params.lfdl_drop_prob > 0.0:
        labels, count = ndimage.label(sim, structure=_EIGHT_CONNECTED)
        for comp in range(1, count + 1):
            if rng.random() < params.lfdl_drop_prob:
                sim[labels == comp] = False
    if active and sim.any():
        ys, xs = np.nonzero(sim)
        r = _HOLE_SIZE // 2
        for _ in range(_HOLE_COUNT):
            i = rng.integers(0, len(ys))
            cy, cx = ys[i], xs[i]
            sim[max(0, cy - r) : cy + r + 1, max(0, cx - r) : cx + r + 1] = False
    return sim


def _degrade_mitl(gt: np.ndarray, params: SynthParams, rng) -> np.ndarray:
    """Over-extending simulation: dilate and add spurious blobs."""
    if not gt.any():
        return np.zeros_like(gt)
    sim = gt.copy()
    if params.mitl_dilation_radius > 0:
        sim = dilate(sim, StructuringElement.ones(2 * params.mitl_dilation_radius + 1))
    h, w = sim.shape
    size = min(params.mitl_blob_size, h, w)
    for _ in range(params.mitl_blob_count):
        y = int(rng.integers(0, h - size + 1))
        x = int(rng.integers(0, w - size + 1))
        sim[y : y + size, x : x + size] = True
    return sim


def synth_corpus(gt_dir, params: SynthParams, out_dir) -> dict:
    """Build simulated LFDL/MITL masks and detection scores from GT masks.

    Writes out_dir/lfdl/<stem>.png, out_dir/mitl/<stem>.png,
    out_dir/scores.csv, and out_dir/manifest.json; returns the manifest
    (image triples plus file locations). Deterministic for a fixed seed
    and input directory.
    """
    gt_paths = list_masks(gt_dir)
    if not gt_paths:
        raise DataIOError(f"{gt_dir}: contains no mask files")
    out_dir = Path(out_dir)
    lfdl_dir = out_dir / "lfdl"
    mitl_dir = out_dir / "mitl"
    lfdl_dir.mkdir(parents=True, exist_ok=True)
    mitl_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(params.seed)
    entries = []
    samples = []
    for stem in sorted(gt_paths):
        gt = _as_binary(load_mask(gt_paths[stem]))
        lfdl_sim = _degrade_lfdl(gt, params, rng)
        mitl_sim = _degrade_mitl(gt, params, rng)
        label = int(gt.any())
        base = 0.9 if label else 0.1
        score = float(np.clip(base + rng.uniform(-_SCORE_NOISE, _SCORE_NOISE), 0.0, 1.0))

        lfdl_path = lfdl_dir / f"{stem}.png"
        mitl_path = mitl_dir / f"{stem}.png"
        save_mask(lfdl_sim, lfdl_path)
        save_mask(mitl_sim, mitl_path)
        samples.append(DetectionSample(id=stem, score=score, label=label))
        entries.append(
            {
                "id": stem,
                "gt": str(gt_paths[stem]),
                "lfdl": str(lfdl_path),
                "mitl": str(mitl_path),
                "label": label,
            }
        )

    scores_path = out_dir / "scores.csv"
    save_scores(samples, scores_path)
    manifest = {
        "seed": params.seed,
        "images": entries,
        "scores": str(scores_path),
        "lfdl_dir": str(lfdl_dir),
        "mitl_dir": str(mitl_dir),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest
