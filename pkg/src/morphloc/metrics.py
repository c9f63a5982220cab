"""Pixel-level localization metrics, detection AUC, and the final score.

Degenerate-case conventions (the formulas are 0/0 there): when both
masks are empty every metric is 1 (perfect agreement); an empty
prediction against a non-empty ground truth scores precision 0, and
symmetrically an empty ground truth against a non-empty prediction
scores recall 0. F1 falls back to 0 when precision + recall == 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, EvaluationError, ParameterError

__all__ = [
    "ConfusionCounts",
    "DetectionSample",
    "MetricsReport",
    "confusion_counts",
    "prf_iou",
    "roc_auc",
    "final_score",
    "aggregate_metrics",
]


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-pixel confusion tallies of a prediction against ground truth."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ParameterError("confusion counts must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


@dataclass(frozen=True)
class DetectionSample:
    """Image-level detection score with its binary label (1 = manipulated)."""

    id: str
    score: float
    label: int

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise ParameterError(f"score for {self.id!r} is not finite")
        if self.label not in (0, 1):
            raise ParameterError(f"label for {self.id!r} must be 0 or 1, got {self.label}")


@dataclass
class MetricsReport:
    """Per-image localization metrics plus the aggregate summary.

    ``aggregate`` holds auc, f1, iou, and final_score; ``mode`` records
    how per-image F1/IoU were aggregated (macro = mean of per-image
    values, micro = pooled pixel counts).
    """

    per_image: list = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    mode: str = "macro"
    errors: list = field(default_factory=list)


def confusion_counts(pred: np.ndarray, gt: np.ndarray) -> ConfusionCounts:
    """Tally tp/fp/fn/tn between two binary masks of equal extents."""
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape or pred.ndim != 2:
        raise DimensionError(f"mask extents differ: {pred.shape} vs {gt.shape}")
    pred = pred.astype(bool)
    gt = gt.astype(bool)
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    tn = pred.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def prf_iou(c: ConfusionCounts) -> dict:
    """Precision, recall, F1, and IoU from confusion counts."""
    if c.tp + c.fp + c.fn == 0:
        return {"precision": 1.0, "recall": 1.0, "f1": 1.0, "iou": 1.0}
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    iou = c.tp / (c.tp + c.fp + c.fn)
    return {"precision": precision, "recall": recall, "f1": f1, "iou": iou}


def roc_auc(samples) -> float:
    """Detection AUC via the Mann-Whitney rank statistic.

    Tied scores contribute 1/2 through midranks, making the result
    exactly the pairwise win fraction. Needs at least one positive and
    one negative sample.
    """
    samples = list(samples)
    scores = np.array([s.score for s in samples], dtype=np.float64)
    labels = np.array([s.label for s in samples], dtype=np.int64)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError(
            f"AUC needs both classes, got {n_pos} positive / {n_neg} negative samples"
        )
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # midrank for the tie group spanning positions i..j (1-based ranks)
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum = ranks[labels == 1].sum()
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def final_score(auc: float, f1: float, iou: float) -> float:
    """Arithmetic mean of detection AUC, F1, and IoU."""
    for name, value in (("auc", auc), ("f1", f1), ("iou", iou)):
        if not 0.0 <= value <= 1.0:
            raise ParameterError(f"{name} must lie in [0,1], got {value}")
    return (auc + f1 + iou) / 3.0


def aggregate_metrics(counts, mode: str = "macro") -> dict:
    """Aggregate per-image confusion counts into corpus-level F1/IoU.

    macro averages the per-image metrics; micro pools the pixel counts
    first. macro is the reported default.
    """
    counts = list(counts)
    if not counts:
        raise EvaluationError("no images to aggregate")
    if mode == "macro":
        per = [prf_iou(c) for c in counts]
        return {
            "f1": float(np.mean([m["f1"] for m in per])),
            "iou": float(np.mean([m["iou"] for m in per])),
        }
    if mode == "micro":
        total = ConfusionCounts(0, 0, 0, 0)
        for c in counts:
            total = total + c
        pooled = prf_iou(total)
        return {"f1": pooled["f1"], "iou": pooled["iou"]}
    raise ParameterError(f"unknown aggregation mode {mode!r}")
