"""Frequency-domain homomorphic filtering.

log -> DFT -> high-frequency-emphasis gain -> inverse DFT -> exp, followed
by an affine rescale to [0, 1].  Compresses the illumination dynamic range
and boosts local contrast ahead of the diffusion stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image_core import NORMALIZED, GrayImage


@dataclass(frozen=True)
class HomomorphicParams:
    gamma_low: float = 0.5
    gamma_high: float = 2.0
    cutoff_d0: float = 30.0
    sharpness_c: float = 1.0
    log_offset: float = 1e-3

    def __post_init__(self):
        if not 0 < self.gamma_low <= self.gamma_high:
            raise ValueError("need gamma_high >= gamma_low > 0")
        if self.cutoff_d0 <= 0 or self.sharpness_c <= 0 or self.log_offset <= 0:
            raise ValueError("cutoff_d0, sharpness_c and log_offset must be positive")


def transfer_function(height: int, width: int, p: HomomorphicParams) -> np.ndarray:
    """Centered Gaussian high-frequency-emphasis gain H(u, v)."""
    v = np.arange(height, dtype=np.float64) - height // 2
    u = np.arange(width, dtype=np.float64) - width // 2
    vv, uu = np.meshgrid(v, u, indexing="ij")
    d2 = vv * vv + uu * uu
    return (p.gamma_high - p.gamma_low) * (
        1.0 - np.exp(-p.sharpness_c * d2 / (p.cutoff_d0**2))
    ) + p.gamma_low


def rescale_unit(data: np.ndarray) -> np.ndarray:
    """Affine min->0, max->1 rescale; a constant field maps to 0.5."""
    lo = float(data.min())
    hi = float(data.max())
    if hi - lo <= 0.0:
        return np.full_like(data, 0.5)
    return (data - lo) / (hi - lo)


def homomorphic_response(img: GrayImage, p: HomomorphicParams) -> np.ndarray:
    """The exp(IDFT(H * DFT(log(img + eps)))) - eps field before rescaling.

    Its spread grows monotonically with gamma_high; the [0, 1] rescale in
    :func:`homomorphic_filter` normalizes that growth away.
    """
    if img.value_range != NORMALIZED:
        raise ValueError("homomorphic filter requires a normalized image")
    z = np.log(img.data + p.log_offset)
    spectrum = np.fft.fft2(z)
    gain = np.fft.ifftshift(transfer_function(img.height, img.width, p))
    filtered = np.real(np.fft.ifft2(gain * spectrum))
    return np.exp(filtered) - p.log_offset


def homomorphic_filter(img: GrayImage, p: HomomorphicParams) -> GrayImage:
    out = homomorphic_response(img, p)
    return GrayImage(img.width, img.height, rescale_unit(out), NORMALIZED)
