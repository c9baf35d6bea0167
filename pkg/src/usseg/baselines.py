"""Classical segmentation baselines.

Derivative edge detectors (Sobel/Prewitt/Laplacian/LoG/Canny), Otsu-style
global thresholding, quadtree split-and-merge and level-by-level watershed
flooding.  Connectivity is 4-connected throughout.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image_core import (
    NORMALIZED,
    RAW,
    GrayImage,
    LabelMap,
    correlate_array,
    gaussian_kernel,
)

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T
PREWITT_X = np.array([[-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]])
PREWITT_Y = PREWITT_X.T
LAPLACIAN = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])

FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

# Responses below this are correlation round-off, not structure (unit-range
# images only).
_RESPONSE_FLOOR = 1e-9


@dataclass
class EdgeMap:
    width: int
    height: int
    edge: np.ndarray

    def __post_init__(self):
        self.edge = np.asarray(self.edge, dtype=bool).reshape(self.height, self.width)


def sobel_magnitude(data: np.ndarray) -> np.ndarray:
    gx = correlate_array(data, SOBEL_X)
    gy = correlate_array(data, SOBEL_Y)
    return np.hypot(gx, gy)


def _gradient_edges(data, kx, ky, threshold_frac):
    mag = np.hypot(correlate_array(data, kx), correlate_array(data, ky))
    peak = mag.max()
    if peak <= _RESPONSE_FLOOR:
        return np.zeros_like(mag, dtype=bool)
    return mag > threshold_frac * peak


def _zero_crossings(lap, gate_frac):
    """Sign changes against the east/south neighbor, gated on jump size."""
    if np.abs(lap).max() <= _RESPONSE_FLOOR:
        return np.zeros(lap.shape, dtype=bool)
    gate = gate_frac * np.abs(lap).max()
    edge = np.zeros(lap.shape, dtype=bool)
    h_prod = lap[:, :-1] * lap[:, 1:]
    h_jump = np.abs(lap[:, :-1] - lap[:, 1:])
    v_prod = lap[:-1, :] * lap[1:, :]
    v_jump = np.abs(lap[:-1, :] - lap[1:, :])
    edge[:, :-1] |= (h_prod < 0) & (h_jump > gate)
    edge[:-1, :] |= (v_prod < 0) & (v_jump > gate)
    return edge


def _canny(data, sigma, high_frac, low_frac):
    smooth = correlate_array(data, gaussian_kernel(sigma).weights)
    gx = correlate_array(smooth, SOBEL_X)
    gy = correlate_array(smooth, SOBEL_Y)
    mag = np.hypot(gx, gy)
    if mag.max() <= _RESPONSE_FLOOR:
        return np.zeros_like(mag, dtype=bool)
    # Non-maximum suppression along the quantized gradient direction.
    angle = np.mod(np.rad2deg(np.arctan2(gy, gx)), 180.0)
    padded = np.pad(mag, 1, mode="constant")
    c = padded[1:-1, 1:-1]
    neighbors = {
        0: (padded[1:-1, 2:], padded[1:-1, :-2]),
        45: (padded[2:, 2:], padded[:-2, :-2]),
        90: (padded[2:, 1:-1], padded[:-2, 1:-1]),
        135: (padded[2:, :-2], padded[:-2, 2:]),
    }
    nms = np.zeros_like(mag)
    bins = np.zeros(angle.shape, dtype=int)
    bins[(angle >= 22.5) & (angle < 67.5)] = 45
    bins[(angle >= 67.5) & (angle < 112.5)] = 90
    bins[(angle >= 112.5) & (angle < 157.5)] = 135
    for b, (fwd, bwd) in neighbors.items():
        sel = (bins == b) & (c >= fwd) & (c >= bwd)
        nms[sel] = mag[sel]
    high = high_frac * mag.max()
    low = low_frac * high
    strong = nms >= high
    weak = nms >= low
    lab, nlab = ndimage.label(weak, structure=FOUR_CONN)
    keep = np.zeros(nlab + 1, dtype=bool)
    keep[np.unique(lab[strong])] = True
    keep[0] = False
    return keep[lab]


def edge_detect(
    img: GrayImage,
    op: str,
    threshold_frac: float = 0.25,
    sigma: float = 1.4,
    gate_frac: float = 0.1,
    high_frac: float = 0.25,
    low_frac: float = 0.4,
) -> EdgeMap:
    """Edge map of a normalized image under the named operator."""
    if img.value_range != NORMALIZED:
        raise ValueError("edge detection requires a normalized image")
    data = img.data
    if op == "sobel":
        edge = _gradient_edges(data, SOBEL_X, SOBEL_Y, threshold_frac)
    elif op == "prewitt":
        edge = _gradient_edges(data, PREWITT_X, PREWITT_Y, threshold_frac)
    elif op == "laplacian":
        edge = _zero_crossings(correlate_array(data, LAPLACIAN), gate_frac)
    elif op == "log":
        smooth = correlate_array(data, gaussian_kernel(sigma).weights)
        edge = _zero_crossings(correlate_array(smooth, LAPLACIAN), gate_frac)
    elif op == "canny":
        edge = _canny(data, sigma, high_frac, low_frac)
    else:
        raise ValueError(f"unknown edge operator {op!r}")
    return EdgeMap(img.width, img.height, edge)


def otsu_threshold(img: GrayImage):
    """Between-class-variance-maximizing threshold on the 256-bin histogram.

    Returns (threshold, mask) where the mask labels pixels > threshold as
    region 2 (foreground) and the rest as region 1.  Ties break toward the
    smaller threshold; a constant image yields its own value and an empty
    foreground.
    """
    if img.value_range != RAW:
        raise ValueError("Otsu thresholding requires a raw-valued image")
    idx = np.clip(np.floor(img.data + 0.5), 0, 255).astype(np.int64)
    counts = np.bincount(idx.ravel(), minlength=256).astype(np.float64)
    total = counts.sum()
    levels = np.arange(256, dtype=np.float64)
    if np.count_nonzero(counts) < 2:
        t = int(np.argmax(counts))
        mask = np.ones_like(idx, dtype=np.int32)
        return t, LabelMap(img.width, img.height, mask)
    w0 = np.cumsum(counts)
    m0 = np.cumsum(counts * levels)
    mg = m0[-1]
    w1 = total - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mg * w0 - total * m0) ** 2 / (w0 * w1)
    between[~np.isfinite(between)] = -1.0
    t = int(np.argmax(between[:255]))
    mask = np.where(idx > t, 2, 1).astype(np.int32)
    return t, LabelMap(img.width, img.height, mask)


# ---------------------------------------------------------------------------
# Quadtree split and merge


def _quadtree_leaves(data, max_std, min_block):
    leaves = []

    def split(y0, y1, x0, x1):
        block = data[y0:y1, x0:x1]
        side = min(y1 - y0, x1 - x0)
        if side > min_block and block.std() > max_std and side >= 2:
            ym = (y0 + y1) // 2
            xm = (x0 + x1) // 2
            split(y0, ym, x0, xm)
            split(y0, ym, xm, x1)
            split(ym, y1, x0, xm)
            split(ym, y1, xm, x1)
        else:
            leaves.append((y0, y1, x0, x1))

    split(0, data.shape[0], 0, data.shape[1])
    return leaves


def split_merge(img: GrayImage, max_std: float = 0.08, min_block: int = 4) -> LabelMap:
    """Quadtree split on the std criterion, then smallest-first merging."""
    if img.value_range != NORMALIZED:
        raise ValueError("split_merge requires a normalized image")
    data = img.data
    h, w = data.shape
    leaves = _quadtree_leaves(data, max_std, min_block)
    labels = np.zeros((h, w), dtype=np.int64)
    stats = {}  # label -> [count, sum, sumsq]
    for k, (y0, y1, x0, x1) in enumerate(leaves, start=1):
        labels[y0:y1, x0:x1] = k
        block = data[y0:y1, x0:x1]
        stats[k] = [block.size, float(block.sum()), float((block * block).sum())]

    def union_std(a, b):
        n = stats[a][0] + stats[b][0]
        s = stats[a][1] + stats[b][1]
        ss = stats[a][2] + stats[b][2]
        var = ss / n - (s / n) ** 2
        return np.sqrt(max(var, 0.0))

    def adjacency():
        pairs = set()
        horiz = labels[:, :-1] != labels[:, 1:]
        for a, b in zip(labels[:, :-1][horiz], labels[:, 1:][horiz]):
            pairs.add((min(a, b), max(a, b)))
        vert = labels[:-1, :] != labels[1:, :]
        for a, b in zip(labels[:-1, :][vert], labels[1:, :][vert]):
            pairs.add((min(a, b), max(a, b)))
        return pairs

    merged = True
    while merged:
        merged = False
        pairs = adjacency()
        regions = sorted(stats, key=lambda k: (stats[k][0], k))
        for a in regions:
            partners = sorted(
                b for x, y in pairs for b in ((y,) if x == a else (x,) if y == a else ())
            )
            for b in partners:
                if union_std(a, b) <= max_std:
                    labels[labels == b] = a
                    stats[a] = [
                        stats[a][0] + stats[b][0],
                        stats[a][1] + stats[b][1],
                        stats[a][2] + stats[b][2],
                    ]
                    del stats[b]
                    merged = True
                    break
            if merged:
                break
    # Relabel contiguously in first-appearance (scan) order.
    out = np.zeros_like(labels, dtype=np.int32)
    next_id = 1
    remap = {}
    for v in labels.ravel():
        if v not in remap:
            remap[v] = next_id
            next_id += 1
    for old, new in remap.items():
        out[labels == old] = new
    return LabelMap(img.width, img.height, out)


# ---------------------------------------------------------------------------
# Watershed


def _quantize_levels(img: GrayImage) -> np.ndarray:
    data = img.data * 255.0 if img.value_range == NORMALIZED else img.data
    return np.clip(np.floor(data + 0.5), 0, 255).astype(np.int32)


def regional_minima(levels: np.ndarray) -> LabelMap:
    """4-connected equal-value plateaus with no strictly lower neighbor."""
    h, w = levels.shape
    labels = np.zeros((h, w), dtype=np.int32)
    next_label = 1
    for y in range(h):
        for x in range(w):
            if labels[y, x]:
                continue
            # Flood the plateau containing (x, y) and test for lower neighbors.
            level = levels[y, x]
            stack = [(y, x)]
            plateau = []
            seen = {(y, x)}
            is_min = True
            while stack:
                cy, cx = stack.pop()
                plateau.append((cy, cx))
                for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                    if not (0 <= ny < h and 0 <= nx < w):
                        continue
                    if levels[ny, nx] < level:
                        is_min = False
                    elif levels[ny, nx] == level and (ny, nx) not in seen:
                        seen.add((ny, nx))
                        stack.append((ny, nx))
            if is_min:
                for cy, cx in plateau:
                    labels[cy, cx] = next_label
                next_label += 1
            else:
                for cy, cx in plateau:
                    labels[cy, cx] = -1  # visited, not a minimum
    labels[labels < 0] = 0
    return LabelMap(w, h, labels)


def watershed(img: GrayImage) -> LabelMap:
    """Level-by-level flooding from the regional minima.

    Pixels reached from exactly one basin join it; pixels reached by two
    or more distinct basins become dam pixels (label 0).
    """
    levels = _quantize_levels(img)
    h, w = levels.shape
    labels = regional_minima(levels).labels.copy()
    dam = np.zeros((h, w), dtype=bool)
    heap = []
    counter = 0
    queued = labels > 0
    for y in range(h):
        for x in range(w):
            if labels[y, x]:
                for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                    if 0 <= ny < h and 0 <= nx < w and not queued[ny, nx]:
                        queued[ny, nx] = True
                        heapq.heappush(heap, (levels[ny, nx], counter, ny, nx))
                        counter += 1
    repush = np.zeros((h, w), dtype=np.int16)
    while heap:
        _, _, y, x = heapq.heappop(heap)
        neighbor_labels = set()
        for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
            if 0 <= ny < h and 0 <= nx < w and labels[ny, nx] > 0:
                neighbor_labels.add(labels[ny, nx])
        if len(neighbor_labels) == 1:
            labels[y, x] = neighbor_labels.pop()
            for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                if 0 <= ny < h and 0 <= nx < w and not queued[ny, nx]:
                    queued[ny, nx] = True
                    heapq.heappush(heap, (levels[ny, nx], counter, ny, nx))
                    counter += 1
        elif len(neighbor_labels) >= 2:
            dam[y, x] = True
        # A queued pixel with no labeled neighbor can only happen next to
        # dam pixels; push it back one level later so flooding continues.
        # A pocket fully walled in by dams eventually becomes dam itself.
        else:
            repush[y, x] += 1
            if repush[y, x] > 8:
                dam[y, x] = True
            else:
                heapq.heappush(heap, (levels[y, x] + repush[y, x], counter, y, x))
                counter += 1
    labels[dam] = 0
    return LabelMap(w, h, labels)
