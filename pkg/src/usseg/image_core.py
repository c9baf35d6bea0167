"""Core image containers, PGM I/O, histograms, convolution and 2-D DFT.

Intensities are stored as floats everywhere; quantization to bytes happens
only when a file is written.  Coordinates are top-left origin, x rightward,
y downward; ``data[y, x]`` addresses pixel (x, y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

RAW = "raw"
NORMALIZED = "normalized"


class PgmError(ValueError):
    """Base class for PGM file problems."""


class PgmHeaderError(PgmError):
    """Malformed or unsupported PGM header."""


class PgmTruncatedError(PgmError):
    """The pixel payload is shorter than the header promises."""


@dataclass
class GrayImage:
    """2-D real-valued intensity field.

    ``value_range`` declares the intended domain: ``raw`` for [0, 255]
    intensities straight from a file, ``normalized`` for [0, 1].  Only the
    normalized domain is enforced; intermediate results (derivatives,
    filter responses) carry ``raw`` as "unconstrained".
    """

    width: int
    height: int
    data: np.ndarray
    value_range: str = RAW

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64).reshape(
            self.height, self.width
        )
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image contains non-finite samples")
        if self.value_range == NORMALIZED:
            if self.data.size and (self.data.min() < 0.0 or self.data.max() > 1.0):
                raise ValueError("normalized image has samples outside [0, 1]")
        elif self.value_range != RAW:
            raise ValueError(f"unknown value_range {self.value_range!r}")

    @classmethod
    def from_array(cls, arr, value_range=RAW) -> "GrayImage":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls(arr.shape[1], arr.shape[0], arr, value_range)


@dataclass
class Histogram:
    bins: np.ndarray  # 256 counts
    total: int

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.int64)
        if self.bins.shape != (256,):
            raise ValueError("histogram must have 256 bins")
        if (self.bins < 0).any() or int(self.bins.sum()) != self.total:
            raise ValueError("inconsistent histogram counts")


@dataclass
class Kernel:
    """Odd square convolution mask, centered."""

    radius: int
    weights: np.ndarray

    def __post_init__(self):
        side = 2 * self.radius + 1
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(side, side)


@dataclass
class LabelMap:
    """Per-pixel integer region assignment.

    0 is reserved for dam/unassigned pixels; positive labels must be the
    contiguous range 1..K.
    """

    width: int
    height: int
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int32).reshape(
            self.height, self.width
        )
        if (self.labels < 0).any():
            raise ValueError("negative labels")
        pos = np.unique(self.labels[self.labels > 0])
        if pos.size and not np.array_equal(pos, np.arange(1, pos.size + 1)):
            raise ValueError("positive labels must be contiguous from 1")

    @property
    def n_regions(self) -> int:
        return int(self.labels.max(initial=0))


# ---------------------------------------------------------------------------
# PGM I/O


def _read_pgm_tokens(buf: bytes, count: int):
    """Read `count` whitespace-separated header tokens, skipping # comments.

    Returns (tokens, offset just past the single whitespace byte that
    terminates the last token).
    """
    tokens = []
    i = 0
    n = len(buf)
    while len(tokens) < count:
        while i < n and buf[i : i + 1].isspace():
            i += 1
        if i < n and buf[i] == ord("#"):
            while i < n and buf[i] not in (10, 13):
                i += 1
            continue
        start = i
        while i < n and not buf[i : i + 1].isspace() and buf[i] != ord("#"):
            i += 1
        if i == start:
            raise PgmHeaderError("unexpected end of header")
        tokens.append(buf[start:i])
    if i >= n or not buf[i : i + 1].isspace():
        raise PgmHeaderError("header not terminated by whitespace")
    return tokens, i + 1


def load_pgm(path) -> GrayImage:
    """Load a binary (P5) or ASCII (P2) PGM with maxval <= 255."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except FileNotFoundError:
        raise FileNotFoundError(f"no such PGM file: {path}")
    if len(buf) < 2 or buf[:2] not in (b"P2", b"P5"):
        raise PgmHeaderError(f"{path}: not a P2/P5 PGM")
    magic = buf[:2].decode()
    try:
        tokens, offset = _read_pgm_tokens(buf[2:], 3)
    except PgmHeaderError as exc:
        raise PgmHeaderError(f"{path}: {exc}")
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise PgmHeaderError(f"{path}: non-numeric header field")
    if width <= 0 or height <= 0:
        raise PgmHeaderError(f"{path}: non-positive dimensions")
    if not 0 < maxval <= 255:
        raise PgmHeaderError(f"{path}: unsupported maxval {maxval}")
    npix = width * height
    payload = buf[2 + offset :]
    if magic == "P5":
        if len(payload) < npix:
            raise PgmTruncatedError(
                f"{path}: expected {npix} bytes, found {len(payload)}"
            )
        data = np.frombuffer(payload[:npix], dtype=np.uint8).astype(np.float64)
    else:
        values = payload.split()
        if len(values) < npix:
            raise PgmTruncatedError(
                f"{path}: expected {npix} samples, found {len(values)}"
            )
        try:
            data = np.array([int(v) for v in values[:npix]], dtype=np.float64)
        except ValueError:
            raise PgmTruncatedError(f"{path}: non-numeric sample")
        if (data < 0).any() or (data > maxval).any():
            raise PgmTruncatedError(f"{path}: sample out of range")
    return GrayImage(width, height, data.reshape(height, width), RAW)


def quantize_u8(data: np.ndarray) -> np.ndarray:
    """Round half up, then clamp to [0, 255]."""
    return np.clip(np.floor(data + 0.5), 0, 255).astype(np.uint8)


def save_pgm(img: GrayImage, path) -> None:
    """Write a binary (P5) PGM with maxval 255.

    Normalized images are scaled by 255 before quantization.
    """
    data = img.data
    if img.value_range == NORMALIZED:
        data = data * 255.0
    raster = quantize_u8(data)
    header = f"P5\n{img.width} {img.height}\n255\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(raster.tobytes())


# ---------------------------------------------------------------------------
# Basic transforms


def normalize(img: GrayImage) -> GrayImage:
    """Map raw [0, 255] intensities to [0, 1]."""
    if img.value_range != RAW:
        raise ValueError("image is already normalized")
    return GrayImage(img.width, img.height, img.data / 255.0, NORMALIZED)


def histogram(img: GrayImage) -> Histogram:
    """256-bin intensity histogram of a raw image."""
    if img.value_range != RAW:
        raise ValueError("histogram requires a raw-valued image")
    idx = np.clip(np.floor(img.data + 0.5), 0, 255).astype(np.int64)
    bins = np.bincount(idx.ravel(), minlength=256)
    return Histogram(bins, img.width * img.height)


_BORDER_MODES = {"replicate": "nearest", "reflect": "reflect"}


def convolve(img: GrayImage, kernel: Kernel, border: str = "replicate") -> GrayImage:
    """Discrete correlation g(x,y) = sum_{s,t} w(s,t) f(x+s, y+t).

    Output dimensions equal the input's; the border is extended per the
    requested policy.  The result is unconstrained, so value_range is raw.
    """
    if border not in _BORDER_MODES:
        raise ValueError(f"unknown border policy {border!r}")
    out = ndimage.correlate(img.data, kernel.weights, mode=_BORDER_MODES[border])
    return GrayImage(img.width, img.height, out, RAW)


def correlate_array(data: np.ndarray, weights: np.ndarray, border="replicate"):
    """Array-level variant of :func:`convolve` for internal pipelines."""
    return ndimage.correlate(data, weights, mode=_BORDER_MODES[border])


def gaussian_kernel(sigma: float) -> Kernel:
    """Normalized isotropic Gaussian mask with radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = math.ceil(3.0 * sigma)
    coords = np.arange(-radius, radius + 1, dtype=np.float64)
    s, t = np.meshgrid(coords, coords, indexing="ij")
    w = np.exp(-(s * s + t * t) / (2.0 * sigma * sigma))
    w /= w.sum()
    return Kernel(radius, w)


# ---------------------------------------------------------------------------
# Frequency domain


def dft2(img: GrayImage) -> np.ndarray:
    """Forward 2-D DFT of the intensity field."""
    return np.fft.fft2(img.data)


def idft2(spectrum: np.ndarray) -> GrayImage:
    """Inverse 2-D DFT; the (real) result is returned as a raw image."""
    data = np.real(np.fft.ifft2(spectrum))
    return GrayImage(data.shape[1], data.shape[0], data, RAW)
