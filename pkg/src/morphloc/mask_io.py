"""Mask and score-file I/O.

Masks live in 8-bit single-channel PNG or PGM files with the 0/255
convention: 0 = authentic, 255 = manipulated. Files containing only
those two values load as boolean masks; anything in between loads as a
probability map v/255 for the caller to threshold. Detection scores
travel in a CSV with the header ``id,score,label``.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataIOError
from .metrics import DetectionSample

__all__ = ["load_mask", "save_mask", "list_masks", "load_scores", "save_scores"]

MASK_SUFFIXES = (".png", ".pgm")

_CHANNEL_MODES = {"RGB": 3, "RGBA": 4, "LA": 2, "P": 3, "PA": 4, "CMYK": 4, "YCbCr": 3}


def load_mask(path) -> np.ndarray:
    """Read a mask file as a boolean mask or probability map.

    Returns a bool (H,W) array when every pixel is 0 or 255, otherwise
    a float64 (H,W) array of probabilities v/255.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            mode = img.mode
            if mode in _CHANNEL_MODES:
                raise DataIOError(
                    f"{path}: expected a single-channel mask, got {_CHANNEL_MODES[mode]} "
                    f"channels (mode {mode})"
                )
            if mode != "L":
                raise DataIOError(f"{path}: unsupported bit depth or mode {mode!r}, need 8-bit gray")
            values = np.asarray(img, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise DataIOError(f"{path}: {exc.strerror or 'not found'}") from exc
    except UnidentifiedImageError as exc:
        raise DataIOError(f"{path}: not a readable PNG/PGM image") from exc
    except OSError as exc:
        if isinstance(exc, DataIOError):
            raise
        raise DataIOError(f"{path}: {exc}") from exc
    if np.isin(values, (0, 255)).all():
        return values == 255
    return values.astype(np.float64) / 255.0


def save_mask(mask: np.ndarray, path) -> None:
    """Write a binary mask as an 8-bit 0/255 image (PNG or PGM by suffix)."""
    path = Path(path)
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise DataIOError(f"{path}: mask to save must be 2-D, got shape {mask.shape}")
    if mask.dtype != bool and not np.isin(mask, (0, 1)).all():
        raise DataIOError(f"{path}: mask to save must be binary")
    if path.suffix.lower() not in MASK_SUFFIXES:
        raise DataIOError(f"{path}: unsupported mask format, use one of {MASK_SUFFIXES}")
    img = Image.fromarray(np.where(mask.astype(bool), 255, 0).astype(np.uint8), mode="L")
    try:
        img.save(path)
    except OSError as exc:
        raise DataIOError(f"{path}: {exc}") from exc


def list_masks(directory) -> dict:
    """Map filename stems to mask paths inside a directory.

    A single mask file maps its own stem. Missing directories raise.
    """
    directory = Path(directory)
    if directory.is_file():
        return {directory.stem: directory}
    if not directory.is_dir():
        raise DataIOError(f"{directory}: no such file or directory")
    found = {}
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() in MASK_SUFFIXES:
            found[path.stem] = path
    return found


def load_scores(path) -> list:
    """Read detection samples from an ``id,score,label`` CSV."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [col.strip() for col in header] != ["id", "score", "label"]:
                raise DataIOError(f"{path}: scores CSV must start with header 'id,score,label'")
            samples = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 3:
                    raise DataIOError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
                try:
                    samples.append(
                        DetectionSample(id=row[0], score=float(row[1]), label=int(row[2]))
                    )
                except ValueError as exc:
                    raise DataIOError(f"{path}:{lineno}: {exc}") from exc
    except FileNotFoundError as exc:
        raise DataIOError(f"{path}: {exc.strerror or 'not found'}") from exc
    return samples


def save_scores(samples, path) -> None:
    """Write detection samples to an ``id,score,label`` CSV."""
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "score", "label"])
            for s in samples:
                writer.writerow([s.id, repr(s.score), s.label])
    except OSError as exc:
        raise DataIOError(f"{path}: {exc}") from exc
