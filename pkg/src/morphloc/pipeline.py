"""End-to-end fusion pipeline: load, binarize, fuse, evaluate, report.

Mask triples are aligned across directories by filename stem. A stem
missing from any directory is recorded as a per-image error and the
run continues; a run with no usable triples at all is fatal. Reports
are deterministic for a fixed configuration: no timestamps, stable key
order, numbers rounded to 6 decimals.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import DataIOError, EvaluationError, ParameterError
from .mask_io import list_masks, load_mask, load_scores, save_mask
from .metrics import MetricsReport, aggregate_metrics, confusion_counts, final_score, prf_iou, roc_auc
from .morphology import StructuringElement, binarize, mdmf_fuse, naive_fuse

logger = logging.getLogger(__name__)

__all__ = [
    "PipelineConfig",
    "parse_config",
    "fuse_masks",
    "run_pipeline",
    "evaluate_masks",
    "emit_report",
]

FUSION_MODES = ("mdmf", "naive", "lfdl-only", "mitl-only")


@dataclass
class PipelineConfig:
    """Declarative description of one pipeline run."""

    lfdl: str = ""
    mitl: str = ""
    gt: str = ""
    scores: str = ""
    out: str = ""
    report: str = ""
    mode: str = "mdmf"
    se_size: int = 5
    threshold: float = 0.5
    cutoff: float = 0.25
    area_lo: float = 0.04
    margin: float = 1.3
    seed: int = 0

    def validate(self) -> "PipelineConfig":
        if self.mode not in FUSION_MODES:
            raise ParameterError(f"fusion mode must be one of {FUSION_MODES}, got {self.mode!r}")
        if self.se_size < 1 or self.se_size % 2 == 0:
            raise ParameterError(f"se_size must be an odd positive integer, got {self.se_size}")
        if not 0.0 < self.threshold < 1.0:
            raise ParameterError(f"threshold must lie in (0,1), got {self.threshold}")
        if not 0.0 < self.cutoff < 1.0:
            raise ParameterError(f"cutoff must lie in (0,1), got {self.cutoff}")
        if not 0.0 < self.area_lo < 1.0:
            raise ParameterError(f"area_lo must lie in (0,1), got {self.area_lo}")
        if self.margin < 1.0:
            raise ParameterError(f"margin must be >= 1, got {self.margin}")
        return self

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def parse_config(path) -> PipelineConfig:
    """Read a plain-text key=value config file into a PipelineConfig."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataIOError(f"{path}: {exc}") from exc
    known = {f.name: f.type for f in fields(PipelineConfig)}
    casts = {"int": int, "float": float, "str": str}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ParameterError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = casts[known[key]](value)
        except ValueError as exc:
            raise ParameterError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return PipelineConfig(**values).validate()


def _to_prob(mask: np.ndarray) -> np.ndarray:
    return mask.astype(np.float64) if mask.dtype == bool else mask


def fuse_masks(
    lfdl: np.ndarray, mitl: np.ndarray, mode: str, se: StructuringElement
) -> np.ndarray:
    """Apply one of the four fusion modes to a binarized mask pair."""
    if mode == "mdmf":
        return mdmf_fuse(lfdl, mitl, se)
    if mode == "naive":
        return naive_fuse(lfdl, mitl)
    if mode == "lfdl-only":
        return lfdl.astype(bool)
    if mode == "mitl-only":
        return mitl.astype(bool)
    raise ParameterError(f"fusion mode must be one of {FUSION_MODES}, got {mode!r}")


def run_pipeline(config: PipelineConfig) -> MetricsReport:
    """Fuse every aligned mask triple, evaluate, and write the report.

    Returns the in-memory report; fused masks land in ``config.out``
    and the JSON report at ``config.report`` when those paths are set.
    """
    config.validate()
    lfdl_paths = list_masks(config.lfdl)
    mitl_paths = list_masks(config.mitl)
    gt_paths = list_masks(config.gt)
    se = StructuringElement.ones(config.se_size)
    out_dir = Path(config.out) if config.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    stems = sorted(set(lfdl_paths) | set(mitl_paths) | set(gt_paths))
    report = MetricsReport(mode="macro")
    counts = []
    for stem in stems:
        missing = [
            name
            for name, paths in (("lfdl", lfdl_paths), ("mitl", mitl_paths), ("gt", gt_paths))
            if stem not in paths
        ]
        if missing:
            message = f"missing {'/'.join(missing)} mask(s)"
            logger.warning("%s: %s", stem, message)
            report.errors.append({"id": stem, "error": message})
            continue
        try:
            lfdl_mask = binarize(_to_prob(load_mask(lfdl_paths[stem])), config.threshold)
            mitl_mask = binarize(_to_prob(load_mask(mitl_paths[stem])), config.threshold)
            gt_mask = binarize(_to_prob(load_mask(gt_paths[stem])), config.threshold)
            fused = fuse_masks(lfdl_mask, mitl_mask, config.mode, se)
            if out_dir is not None:
                save_mask(fused, out_dir / f"{stem}.png")
        except (DataIOError, ParameterError, ValueError) as exc:
            logger.warning("%s: %s", stem, exc)
            report.errors.append({"id": stem, "error": str(exc)})
            continue
        c = confusion_counts(fused, gt_mask)
        counts.append(c)
        report.per_image.append({"id": stem, **prf_iou(c)})

    if not counts:
        raise EvaluationError("no aligned lfdl/mitl/gt mask triples to evaluate")
    agg = aggregate_metrics(counts, mode=report.mode)
    auc = roc_auc(load_scores(config.scores))
    report.aggregate = {
        "auc": auc,
        "f1": agg["f1"],
        "iou": agg["iou"],
        "final_score": final_score(auc, agg["f1"], agg["iou"]),
    }
    if config.report:
        emit_report(report, config.report, config_echo=config.echo())
    return report


def evaluate_masks(pred_dir, gt_dir, scores_path, report_path=None, threshold: float = 0.5) -> MetricsReport:
    """Score already-fused prediction masks against ground truth.

    Pairs masks by filename stem, computes per-image precision/recall/
    F1/IoU plus macro aggregates, folds in detection AUC from the
    scores CSV, and optionally writes the JSON report.
    """
    pred_paths = list_masks(pred_dir)
    gt_paths = list_masks(gt_dir)
    stems = sorted(set(pred_paths) | set(gt_paths))
    report = MetricsReport(mode="macro")
    counts = []
    for stem in stems:
        if stem not in pred_paths or stem not in gt_paths:
            side = "pred" if stem not in pred_paths else "gt"
            message = f"missing {side} mask"
            logger.warning("%s: %s", stem, message)
            report.errors.append({"id": stem, "error": message})
            continue
        try:
            pred = binarize(_to_prob(load_mask(pred_paths[stem])), threshold)
            gt = binarize(_to_prob(load_mask(gt_paths[stem])), threshold)
        except (DataIOError, ParameterError, ValueError) as exc:
            logger.warning("%s: %s", stem, exc)
            report.errors.append({"id": stem, "error": str(exc)})
            continue
        c = confusion_counts(pred, gt)
        counts.append(c)
        report.per_image.append({"id": stem, **prf_iou(c)})
    if not counts:
        raise EvaluationError("no aligned pred/gt mask pairs to evaluate")
    agg = aggregate_metrics(counts, mode=report.mode)
    auc = roc_auc(load_scores(scores_path))
    report.aggregate = {
        "auc": auc,
        "f1": agg["f1"],
        "iou": agg["iou"],
        "final_score": final_score(auc, agg["f1"], agg["iou"]),
    }
    if report_path:
        emit_report(
            report,
            report_path,
            config_echo={"pred": str(pred_dir), "gt": str(gt_dir), "scores": str(scores_path), "threshold": threshold},
        )
    return report


def _round6(value: float) -> float:
    return round(float(value), 6)


def emit_report(report: MetricsReport, path, config_echo: dict | None = None) -> None:
    """Serialize a report to JSON with stable key order and 6-decimal numbers.

    The serialized final_score is recomputed from the rounded aggregate
    fields so the emitted file is self-consistent.
    """
    per_image = [
        {
            "id": row["id"],
            "precision": _round6(row["precision"]),
            "recall": _round6(row["recall"]),
            "f1": _round6(row["f1"]),
            "iou": _round6(row["iou"]),
        }
        for row in report.per_image
    ]
    payload = {"per_image": per_image, "aggregate": {}, "config_echo": config_echo or {}}
    if report.aggregate:
        auc = _round6(report.aggregate["auc"])
        f1 = _round6(report.aggregate["f1"])
        iou = _round6(report.aggregate["iou"])
        payload["aggregate"] = {
            "auc": auc,
            "f1": f1,
            "iou": iou,
            "final_score": _round6((auc + f1 + iou) / 3.0),
        }
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise DataIOError(f"{path}: {exc}") from exc
