"""Morphology-driven mask fusion toolkit for deepfake localization.

Deterministic numeric building blocks for localizing manipulated image
regions: frequency and SRM feature enhancement, the local-stream
attention/consistency mechanisms, multi-scale adaptive fusion with
deterministic stand-in encoders, binary morphology mask fusion, and a
full pixel-level evaluation suite with a batch CLI.
"""

from .errors import (
    DataIOError,
    DimensionError,
    EvaluationError,
    MorphlocError,
    ParameterError,
)
from .frequency import FrequencySplit, dct2, freq_concat, frequency_split, idct2, srm_residual
from .kernels import conv2d, cosine_map, resize_bilinear, softmax_rows
from .local_stream import (
    FaceBox,
    PatchGrid,
    Projection,
    adaptive_crop,
    cmce_refine,
    lfga_attention,
    lfga_recalibrate,
    mpff_patch_consistency,
    patch_labels,
    sspsl_pseudo_mask,
    training_losses,
)
from .mask_io import load_mask, load_scores, save_mask, save_scores
from .meso_fusion import (
    ScalePredictions,
    amw_fuse,
    fuse_weighted,
    merge_predictions,
    stub_scale_predictions,
    stub_weighting,
)
from .metrics import (
    ConfusionCounts,
    DetectionSample,
    MetricsReport,
    aggregate_metrics,
    confusion_counts,
    final_score,
    prf_iou,
    roc_auc,
)
from .morphology import StructuringElement, binarize, dilate, erode, mdmf_fuse, naive_fuse
from .pipeline import PipelineConfig, emit_report, evaluate_masks, fuse_masks, parse_config, run_pipeline
from .synth import SynthParams, synth_corpus

__version__ = "0.1.0"

__all__ = [
    "MorphlocError",
    "DimensionError",
    "ParameterError",
    "DataIOError",
    "EvaluationError",
    "conv2d",
    "cosine_map",
    "softmax_rows",
    "resize_bilinear",
    "FrequencySplit",
    "dct2",
    "idct2",
    "frequency_split",
    "freq_concat",
    "srm_residual",
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
    "ScalePredictions",
    "stub_scale_predictions",
    "merge_predictions",
    "stub_weighting",
    "fuse_weighted",
    "amw_fuse",
    "StructuringElement",
    "dilate",
    "erode",
    "mdmf_fuse",
    "naive_fuse",
    "binarize",
    "ConfusionCounts",
    "DetectionSample",
    "MetricsReport",
    "confusion_counts",
    "prf_iou",
    "roc_auc",
    "final_score",
    "aggregate_metrics",
    "load_mask",
    "save_mask",
    "load_scores",
    "save_scores",
    "PipelineConfig",
    "parse_config",
    "fuse_masks",
    "run_pipeline",
    "evaluate_masks",
    "emit_report",
    "SynthParams",
    "synth_corpus",
]
