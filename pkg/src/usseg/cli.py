"""`seg` command line interface.

Subcommands: run (segment an image), phantom (generate a synthetic test
image plus ground truth), eval (per-region Dice), hist (256-bin
histogram dump).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import baselines
from .config import ConfigError, load_phantom_spec, load_pipeline_config
from .evaluate import dice_scores, overlay
from .image_core import (
    NORMALIZED,
    GrayImage,
    LabelMap,
    histogram,
    load_pgm,
    normalize,
    save_pgm,
)
from .phantom import PhantomSpec, generate_phantom
from .pipeline import PipelineError, PipelineParams, crop_image, run_pipeline


class CliError(Exception):
    def __init__(self, stage, message):
        super().__init__(message)
        self.stage = stage


def _save_labels(labels: LabelMap, path) -> None:
    if labels.labels.max(initial=0) > 255:
        raise CliError("output", "more than 255 regions cannot be saved as PGM")
    save_pgm(GrayImage(labels.width, labels.height, labels.labels.astype(float)), path)


def _load_labels(path) -> LabelMap:
    img = load_pgm(path)
    return LabelMap(img.width, img.height, img.data.astype(int))


def _run_baseline(method: str, img: GrayImage, args) -> LabelMap:
    norm = normalize(img)
    if method == "otsu":
        _, mask = baselines.otsu_threshold(img)
        return mask
    if method == "watershed":
        return baselines.watershed(img)
    if method == "splitmerge":
        return baselines.split_merge(norm)
    if method.startswith("edge:"):
        op = method.split(":", 1)[1]
        edges = baselines.edge_detect(norm, op)
        # Edge maps are not region label maps; serialize as 0/255 binary.
        return LabelMap(edges.width, edges.height, edges.edge.astype(int))
    raise CliError("arguments", f"unknown method {method!r}")


def cmd_run(args) -> int:
    try:
        img = load_pgm(args.input)
    except Exception as exc:
        raise CliError("input", str(exc))
    try:
        params = load_pipeline_config(args.config) if args.config else PipelineParams()
    except ConfigError as exc:
        raise CliError("config", str(exc))
    if args.crop:
        try:
            rect = tuple(int(v) for v in args.crop.split(","))
            if len(rect) != 4:
                raise ValueError
        except ValueError:
            raise CliError("arguments", "--crop needs X,Y,W,H")
        params = dataclasses.replace(params, crop=rect)

    if args.method == "ncut":
        try:
            result = run_pipeline(img, params, keep_stages=bool(args.dump_stages))
        except PipelineError as exc:
            raise CliError(exc.stage, str(exc))
        labels = result.labels
        if args.dump_stages:
            os.makedirs(args.dump_stages, exist_ok=True)
            for name, stage_img in result.stages.items():
                save_pgm(stage_img, os.path.join(args.dump_stages, f"{name}.pgm"))
        for value in result.region_ncuts:
            print(f"split ncut {value:.6f}")
    else:
        if params.crop:
            img = crop_image(img, params.crop)
        try:
            labels = _run_baseline(args.method, img, args)
        except CliError:
            raise
        except Exception as exc:
            raise CliError(args.method, str(exc))

    if args.labels:
        if args.method.startswith("edge:"):
            edge255 = labels.labels.astype(float) * 255.0
            save_pgm(GrayImage(labels.width, labels.height, edge255), args.labels)
        else:
            _save_labels(labels, args.labels)
    if args.overlay:
        base = img if img.value_range == NORMALIZED else normalize(img)
        if params.crop and args.method == "ncut":
            base = crop_image(base, params.crop)
        overlay(base, labels, args.overlay)
    print(f"regions {labels.labels.max(initial=0)}")
    return 0


def cmd_phantom(args) -> int:
    try:
        if args.spec:
            spec = load_phantom_spec(args.spec, seed=args.seed)
        else:
            spec = PhantomSpec(seed=args.seed)
    except (ConfigError, ValueError) as exc:
        raise CliError("config", str(exc))
    img, truth = generate_phantom(spec)
    save_pgm(img, args.out)
    _save_labels(truth, args.truth)
    print(f"phantom {spec.size}x{spec.size} seed {spec.seed}")
    return 0


def cmd_eval(args) -> int:
    try:
        pred = _load_labels(args.pred)
        truth = _load_labels(args.truth)
    except Exception as exc:
        raise CliError("input", str(exc))
    try:
        scores = dice_scores(pred, truth)
    except ValueError as exc:
        raise CliError("eval", str(exc))
    for label in sorted(scores):
        matched, value = scores[label]
        print(f"{label} {matched if matched is not None else '-'} {value:.6f}")
    return 0


def cmd_hist(args) -> int:
    try:
        img = load_pgm(args.input)
    except Exception as exc:
        raise CliError("input", str(exc))
    h = histogram(img)
    for k in range(256):
        print(f"{k} {int(h.bins[k])}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="segment a PGM image")
    p_run.add_argument("--input", required=True)
    p_run.add_argument("--config")
    p_run.add_argument(
        "--method",
        default="ncut",
        help="ncut|otsu|watershed|splitmerge|edge:<sobel|prewitt|laplacian|log|canny>",
    )
    p_run.add_argument("--labels")
    p_run.add_argument("--overlay")
    p_run.add_argument("--crop")
    p_run.add_argument("--dump-stages", dest="dump_stages")
    p_run.set_defaults(func=cmd_run)

    p_ph = sub.add_parser("phantom", help="generate a synthetic phantom")
    p_ph.add_argument("--spec")
    p_ph.add_argument("--seed", type=int, default=0)
    p_ph.add_argument("--out", required=True)
    p_ph.add_argument("--truth", required=True)
    p_ph.set_defaults(func=cmd_phantom)

    p_ev = sub.add_parser("eval", help="per-region Dice of predicted labels")
    p_ev.add_argument("--pred", required=True)
    p_ev.add_argument("--truth", required=True)
    p_ev.set_defaults(func=cmd_eval)

    p_hi = sub.add_parser("hist", help="print the 256-bin histogram")
    p_hi.add_argument("--input", required=True)
    p_hi.set_defaults(func=cmd_hist)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"seg: error in {exc.stage}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
