"""Command-line surface for the fusion toolkit.

Subcommands:
  fuse      combine LFDL and MITL masks with a chosen fusion mode
  eval      score prediction masks against ground truth + detection AUC
  pipeline  full fuse+evaluate run driven by a key=value config file
  synth     build the synthetic degradation corpus from GT masks

Exit codes: 0 success, 1 usage/config error, 2 I/O error,
3 evaluation error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import DataIOError, EvaluationError, MorphlocError, ParameterError
from .mask_io import list_masks, load_mask, save_mask
from .morphology import StructuringElement, binarize
from .pipeline import FUSION_MODES, PipelineConfig, evaluate_masks, fuse_masks, parse_config, run_pipeline
from .synth import SynthParams, synth_corpus

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_EVAL = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors by default; this toolkit
    # reserves 2 for I/O problems.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="morphloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    fuse = sub.add_parser("fuse", help="fuse LFDL and MITL masks")
    fuse.add_argument("--lfdl", required=True, help="LFDL mask file or directory")
    fuse.add_argument("--mitl", required=True, help="MITL mask file or directory")
    fuse.add_argument("--mode", default="mdmf", choices=FUSION_MODES)
    fuse.add_argument("--se", type=int, default=5, help="structuring element size (odd)")
    fuse.add_argument("--threshold", type=float, default=0.5, help="binarization threshold")
    fuse.add_argument("--out", required=True, help="output directory for fused masks")

    ev = sub.add_parser("eval", help="evaluate prediction masks against ground truth")
    ev.add_argument("--pred", required=True, help="prediction mask directory")
    ev.add_argument("--gt", required=True, help="ground-truth mask directory")
    ev.add_argument("--scores", required=True, help="detection scores CSV (id,score,label)")
    ev.add_argument("--report", required=True, help="output JSON report path")
    ev.add_argument("--threshold", type=float, default=0.5)

    pipe = sub.add_parser("pipeline", help="run the full fuse+eval pipeline from a config file")
    pipe.add_argument("--config", required=True, help="key=value config file")

    synth = sub.add_parser("synth", help="generate the synthetic degradation corpus")
    synth.add_argument("--gt", required=True, help="ground-truth mask directory")
    synth.add_argument("--seed", type=int, default=42)
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--erosion-radius", type=int, default=2, help="LFDL erosion radius")
    synth.add_argument("--drop-prob", type=float, default=0.3, help="LFDL component drop probability")
    synth.add_argument("--dilation-radius", type=int, default=3, help="MITL dilation radius")
    synth.add_argument("--blob-count", type=int, default=2, help="MITL spurious blob count")
    synth.add_argument("--blob-size", type=int, default=5, help="MITL spurious blob size")
    return parser


def _cmd_fuse(args) -> int:
    if args.se < 1 or args.se % 2 == 0:
        raise ParameterError(f"--se must be an odd positive integer, got {args.se}")
    lfdl_paths = list_masks(args.lfdl)
    mitl_paths = list_masks(args.mitl)
    stems = sorted(set(lfdl_paths) & set(mitl_paths))
    if not stems:
        raise EvaluationError("no filename stems shared between --lfdl and --mitl")
    se = StructuringElement.ones(args.se)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for stem in stems:
        lfdl = load_mask(lfdl_paths[stem])
        mitl = load_mask(mitl_paths[stem])
        lfdl = binarize(lfdl.astype(float) if lfdl.dtype == bool else lfdl, args.threshold)
        mitl = binarize(mitl.astype(float) if mitl.dtype == bool else mitl, args.threshold)
        save_mask(fuse_masks(lfdl, mitl, args.mode, se), out_dir / f"{stem}.png")
    print(f"fused {len(stems)} mask pair(s) -> {out_dir}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    report = evaluate_masks(args.pred, args.gt, args.scores, args.report, threshold=args.threshold)
    agg = report.aggregate
    print(
        f"auc={agg['auc']:.6f} f1={agg['f1']:.6f} iou={agg['iou']:.6f} "
        f"final_score={agg['final_score']:.6f} ({len(report.per_image)} image(s), "
        f"{len(report.errors)} error(s)) -> {args.report}"
    )
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    config = parse_config(args.config)
    report = run_pipeline(config)
    agg = report.aggregate
    print(
        f"mode={config.mode} auc={agg['auc']:.6f} f1={agg['f1']:.6f} iou={agg['iou']:.6f} "
        f"final_score={agg['final_score']:.6f} ({len(report.per_image)} image(s), "
        f"{len(report.errors)} error(s))"
    )
    return EXIT_OK


def _cmd_synth(args) -> int:
    params = SynthParams(
        seed=args.seed,
        lfdl_erosion_radius=args.erosion_radius,
        lfdl_drop_prob=args.drop_prob,
        mitl_dilation_radius=args.dilation_radius,
        mitl_blob_count=args.blob_count,
        mitl_blob_size=args.blob_size,
    )
    manifest = synth_corpus(args.gt, params, args.out)
    print(f"wrote {len(manifest['images'])} triple(s) -> {args.out}")
    return EXIT_OK


_COMMANDS = {"fuse": _cmd_fuse, "eval": _cmd_eval, "pipeline": _cmd_pipeline, "synth": _cmd_synth}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit:
        raise
    except DataIOError as exc:
        sys.stderr.write(f"morphloc: I/O error: {exc}\n")
        return EXIT_IO
    except EvaluationError as exc:
        sys.stderr.write(f"morphloc: evaluation error: {exc}\n")
        return EXIT_EVAL
    except (ParameterError, MorphlocError, ValueError) as exc:
        sys.stderr.write(f"morphloc: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
