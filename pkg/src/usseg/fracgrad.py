"""Fractional-order gradient features.

A 5x5 directional mask family built from the order-v backward-difference
coefficients (center weight fixed at 8 so the mask sum stays nonzero and
low frequencies survive).  The four directional responses are combined by
a per-pixel maximum and stacked back onto the source image, producing the
feature image handed to the affinity graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image_core import NORMALIZED, GrayImage, Kernel, correlate_array
from .homomorphic import rescale_unit

# Inner ring (Chebyshev distance 1) of a 5x5 mask in clockwise order.
_INNER_RING = [(1, 1), (1, 2), (1, 3), (2, 3), (3, 3), (3, 2), (3, 1), (2, 1)]


@dataclass(frozen=True)
class FracParams:
    order_v: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.order_v <= 1.0:
            raise ValueError("fractional order must lie in (0, 1]")


def gl_coefficients(v: float, count: int) -> np.ndarray:
    """First `count` backward-difference coefficients of order v.

    c_0 = 1, c_k = Gamma(-v+1) / (k! * Gamma(-v+k+1)), computed via the
    stable recurrence c_k = c_{k-1} * (k - 1 - v) / k.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    c = np.empty(count, dtype=np.float64)
    c[0] = 1.0
    for k in range(1, count):
        c[k] = c[k - 1] * (k - 1 - v) / k
    return c


def _base_mask(v: float) -> np.ndarray:
    q = (v * v - v) / 2.0
    return np.array(
        [
            [q, 0.0, q, 0.0, q],
            [0.0, -v, -v, -v, 0.0],
            [q, 0.0, 8.0, 0.0, q],
            [0.0, -v, -v, -v, 0.0],
            [q, 0.0, q, 0.0, q],
        ]
    )


def _rotate_inner_ring(mask: np.ndarray, steps: int) -> np.ndarray:
    """Rotate the distance-1 ring by `steps` eighths of a turn.

    The outer ring's alternating pattern is invariant under a 2-step (45
    degree) rotation, so rotating only the inner ring yields the diagonal
    orientations.
    """
    out = mask.copy()
    vals = [mask[p] for p in _INNER_RING]
    for i, pos in enumerate(_INNER_RING):
        out[pos] = vals[(i - steps) % 8]
    return out


def frac_masks(v: float):
    """Four 5x5 masks: x, y, right-diagonal, left-diagonal orientations."""
    if not 0.0 < v <= 1.0:
        raise ValueError("fractional order must lie in (0, 1]")
    mx = _base_mask(v)
    my = np.rot90(mx)
    md1 = _rotate_inner_ring(mx, 1)
    md2 = np.rot90(md1)
    return tuple(Kernel(2, m) for m in (mx, my, md1, md2))


def frac_gradient(img: GrayImage, p: FracParams) -> GrayImage:
    """Max of the four directional responses, stacked onto the source.

    The stacked field is affinely rescaled to [0, 1]; a constant result
    maps to 0.5.
    """
    if img.value_range != NORMALIZED:
        raise ValueError("fractional gradient requires a normalized image")
    responses = [
        correlate_array(img.data, k.weights) for k in frac_masks(p.order_v)
    ]
    combined = np.maximum.reduce(responses)
    stacked = combined + img.data
    return GrayImage(img.width, img.height, rescale_unit(stacked), NORMALIZED)
