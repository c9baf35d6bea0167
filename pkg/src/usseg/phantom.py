"""Synthetic speckled phantom: dark ellipse (nodule) and disk (trachea) on
a brighter background, with seeded multiplicative noise.

Noise model: I = I0 * (1 + speckle_sigma * g), g ~ N(0, 1) drawn from
numpy's default PCG64 generator with the given seed, then clamped to
[0, 1].  The generator choice is fixed so phantoms are reproducible
bit-for-bit across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image_core import NORMALIZED, GrayImage, LabelMap

BACKGROUND_LABEL = 1
NODULE_LABEL = 2
TRACHEA_LABEL = 3


@dataclass(frozen=True)
class PhantomSpec:
    size: int = 128
    background_level: float = 0.55
    nodule_center: tuple = (44.0, 60.0)  # (x, y)
    nodule_axes: tuple = (22.0, 14.0)  # (semi-x, semi-y)
    nodule_level: float = 0.25
    trachea_center: tuple = (92.0, 84.0)
    trachea_radius: float = 12.0
    trachea_level: float = 0.15
    speckle_sigma: float = 0.15
    seed: int = 0

    def __post_init__(self):
        levels = (self.background_level, self.nodule_level, self.trachea_level)
        if any(not 0.0 <= lv <= 1.0 for lv in levels):
            raise ValueError("levels must lie in [0, 1]")
        if self.speckle_sigma < 0:
            raise ValueError("speckle_sigma must be >= 0")
        cx, cy = self.nodule_center
        ax, ay = self.nodule_axes
        if min(ax, ay) <= 0 or self.trachea_radius <= 0:
            raise ValueError("shape extents must be positive")
        if not (
            0 <= cx - ax and cx + ax < self.size and 0 <= cy - ay and cy + ay < self.size
        ):
            raise ValueError("nodule ellipse does not fit the canvas")
        tx, ty = self.trachea_center
        r = self.trachea_radius
        if not (0 <= tx - r and tx + r < self.size and 0 <= ty - r and ty + r < self.size):
            raise ValueError("trachea disk does not fit the canvas")


def generate_phantom(spec: PhantomSpec):
    """Render the phantom; returns (image, ground-truth LabelMap)."""
    n = spec.size
    y, x = np.mgrid[0:n, 0:n].astype(np.float64)
    truth = np.full((n, n), BACKGROUND_LABEL, dtype=np.int32)
    cx, cy = spec.nodule_center
    ax, ay = spec.nodule_axes
    nodule = ((x - cx) / ax) ** 2 + ((y - cy) / ay) ** 2 <= 1.0
    truth[nodule] = NODULE_LABEL
    tx, ty = spec.trachea_center
    trachea = (x - tx) ** 2 + (y - ty) ** 2 <= spec.trachea_radius**2
    truth[trachea] = TRACHEA_LABEL
    levels = np.array(
        [0.0, spec.background_level, spec.nodule_level, spec.trachea_level]
    )
    clean = levels[truth]
    rng = np.random.default_rng(spec.seed)
    g = rng.standard_normal((n, n))
    noisy = np.clip(clean * (1.0 + spec.speckle_sigma * g), 0.0, 1.0)
    img = GrayImage(n, n, noisy, NORMALIZED)
    return img, LabelMap(n, n, truth)
