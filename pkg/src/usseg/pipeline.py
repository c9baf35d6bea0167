"""End-to-end segmentation pipeline.

Fixed stage order: optional crop -> normalize -> homomorphic filter ->
anisotropic diffusion -> fractional gradient -> recursive normalized cut.
Disabled stages are the identity.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .diffusion import DiffusionParams, diffuse
from .fracgrad import FracParams, frac_gradient
from .homomorphic import HomomorphicParams, homomorphic_filter
from .image_core import NORMALIZED, RAW, GrayImage, LabelMap, normalize
from .ncut import NcutParams, recursive_ncut_with_stats


class PipelineError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class PipelineParams:
    homomorphic: HomomorphicParams = field(default_factory=HomomorphicParams)
    diffusion: DiffusionParams = field(default_factory=DiffusionParams)
    frac: FracParams = field(default_factory=FracParams)
    ncut: NcutParams = field(default_factory=NcutParams)
    enable_homomorphic: bool = True
    enable_diffusion: bool = True
    enable_frac: bool = True
    crop: tuple | None = None  # (x, y, w, h)


@dataclass
class SegmentationResult:
    labels: LabelMap
    region_ncuts: list
    stages: dict  # stage name -> GrayImage snapshot
    timings: dict  # stage name -> seconds


def crop_image(img: GrayImage, rect) -> GrayImage:
    x, y, w, h = (int(v) for v in rect)
    if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > img.width or y + h > img.height:
        raise ValueError(f"crop rectangle {rect} outside {img.width}x{img.height}")
    return GrayImage(w, h, img.data[y : y + h, x : x + w], img.value_range)


def run_pipeline(
    img: GrayImage, p: PipelineParams, keep_stages: bool = False
) -> SegmentationResult:
    stages = {}
    timings = {}

    def run(name, fn, image):
        t0 = time.perf_counter()
        try:
            out = fn(image)
        except Exception as exc:
            raise PipelineError(name, exc)
        timings[name] = time.perf_counter() - t0
        if keep_stages:
            stages[name] = out
        return out

    current = img
    if p.crop is not None:
        current = run("crop", lambda im: crop_image(im, p.crop), current)
    if current.value_range == RAW:
        current = run("normalize", normalize, current)
    if p.enable_homomorphic:
        current = run(
            "homomorphic", lambda im: homomorphic_filter(im, p.homomorphic), current
        )
    if p.enable_diffusion:
        current = run("diffusion", lambda im: diffuse(im, p.diffusion), current)
    if p.enable_frac:
        current = run("frac_gradient", lambda im: frac_gradient(im, p.frac), current)
    t0 = time.perf_counter()
    try:
        labels, ncuts = recursive_ncut_with_stats(current, p.ncut)
    except Exception as exc:
        raise PipelineError("ncut", exc)
    timings["ncut"] = time.perf_counter() - t0
    return SegmentationResult(labels, ncuts, stages, timings)
