"""Segmentation scoring and result rendering."""

from __future__ import annotations

import numpy as np
from PIL import Image

from .image_core import NORMALIZED, GrayImage, LabelMap, quantize_u8

# Boundary color cycle, indexed by label modulo the palette length.
PALETTE = [
    (255, 64, 64),
    (64, 255, 64),
    (64, 128, 255),
    (255, 224, 32),
    (255, 64, 255),
    (64, 255, 255),
    (255, 144, 32),
    (160, 96, 255),
]


def dice_scores(pred: LabelMap, truth: LabelMap) -> dict:
    """Greedy per-truth-region Dice against the predicted regions.

    (truth, predicted) pairs are matched in order of decreasing overlap,
    each predicted region being consumed at most once.  Returns
    {truth_label: (matched_pred_label_or_None, dice)}.
    """
    if (pred.width, pred.height) != (truth.width, truth.height):
        raise ValueError("label map dimensions differ")
    t = truth.labels.ravel()
    p = pred.labels.ravel()
    truth_labels = [int(v) for v in np.unique(t) if v > 0]
    pred_labels = [int(v) for v in np.unique(p) if v > 0]
    t_sizes = {v: int((t == v).sum()) for v in truth_labels}
    p_sizes = {v: int((p == v).sum()) for v in pred_labels}
    overlaps = []
    for tv in truth_labels:
        sel = p[t == tv]
        counts = np.bincount(sel, minlength=1)
        for pv in pred_labels:
            if pv < len(counts) and counts[pv] > 0:
                overlaps.append((int(counts[pv]), tv, pv))
    overlaps.sort(key=lambda rec: (-rec[0], rec[1], rec[2]))
    result = {tv: (None, 0.0) for tv in truth_labels}
    used_t, used_p = set(), set()
    for inter, tv, pv in overlaps:
        if tv in used_t or pv in used_p:
            continue
        used_t.add(tv)
        used_p.add(pv)
        result[tv] = (pv, 2.0 * inter / (t_sizes[tv] + p_sizes[pv]))
    return result


def boundary_mask(labels: np.ndarray) -> np.ndarray:
    """Pixels with a 4-connected neighbor of a different label."""
    b = np.zeros(labels.shape, dtype=bool)
    diff_h = labels[:, :-1] != labels[:, 1:]
    diff_v = labels[:-1, :] != labels[1:, :]
    b[:, :-1] |= diff_h
    b[:, 1:] |= diff_h
    b[:-1, :] |= diff_v
    b[1:, :] |= diff_v
    return b


def overlay(img: GrayImage, labels: LabelMap, path) -> None:
    """Write the grayscale base with colored region boundaries as PNG."""
    if (img.width, img.height) != (labels.width, labels.height):
        raise ValueError("image and label map dimensions differ")
    base = img.data * 255.0 if img.value_range == NORMALIZED else img.data
    gray = quantize_u8(base)
    rgb = np.stack([gray] * 3, axis=-1)
    border = boundary_mask(labels.labels)
    ys, xs = np.nonzero(border)
    for y, x in zip(ys, xs):
        color = PALETTE[int(labels.labels[y, x]) % len(PALETTE)]
        rgb[y, x] = color
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")
