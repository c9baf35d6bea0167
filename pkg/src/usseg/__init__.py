"""Grayscale image segmentation toolkit: recursive normalized cuts with
homomorphic, anisotropic-diffusion and fractional-gradient preprocessing,
plus classical baselines and a synthetic phantom harness."""

from .image_core import (
    GrayImage,
    Histogram,
    Kernel,
    LabelMap,
    convolve,
    dft2,
    gaussian_kernel,
    histogram,
    idft2,
    load_pgm,
    normalize,
    save_pgm,
)
from .homomorphic import HomomorphicParams, homomorphic_filter
from .diffusion import DiffusionParams, derivatives, diffuse, diffuse_step
from .fracgrad import FracParams, frac_gradient, frac_masks, gl_coefficients
from .ncut import (
    NcutParams,
    Partition,
    SparseAffinity,
    best_threshold_split,
    build_affinity,
    cut_value,
    fiedler_vector,
    ncut_value,
    recursive_ncut,
    recursive_ncut_with_stats,
)
from .baselines import EdgeMap, edge_detect, otsu_threshold, split_merge, watershed
from .phantom import PhantomSpec, generate_phantom
from .evaluate import dice_scores, overlay
from .pipeline import PipelineParams, SegmentationResult, run_pipeline

__all__ = [name for name in dir() if not name.startswith("_")]
