"""Pixel-affinity graph and recursive two-way normalized cuts.

The affinity couples pixels within a spatial radius by the product of an
intensity Gaussian and a spatial Gaussian; segmentation thresholds the
Fiedler vector of the generalized eigenproblem (D - W) y = lambda D y and
recurses while the accepted cut stays under the stopping threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .image_core import NORMALIZED, GrayImage, LabelMap

DEGREE_FLOOR = 1e-12


class NcutError(Exception):
    pass


class ZeroVolumeError(NcutError):
    """A partition side has zero volume."""


class DisconnectedGraphError(NcutError):
    """The graph is disconnected; split by component instead."""


class DegenerateSplitError(NcutError):
    """Every candidate threshold produces a one-sided partition."""


class EigensolverError(NcutError):
    """The Fiedler solve did not reach the requested residual."""


@dataclass(frozen=True)
class NcutParams:
    sigma_i: float = 0.3
    sigma_x: float = 0.1
    radius_r: float = 20.0
    ncut_threshold: float = 0.065
    min_region: int = 64
    max_regions: int = 16
    n_splits: int = 32
    eig_tol: float = 1e-6
    dense_cutoff: int = 4096
    # sigma_x is a fraction of the image diagonal by default; flip this to
    # interpret it in pixel units instead.
    sigma_x_in_pixels: bool = False

    def __post_init__(self):
        if self.sigma_i <= 0 or self.sigma_x <= 0:
            raise ValueError("bandwidths must be positive")
        if self.radius_r < 1:
            raise ValueError("radius_r must be >= 1")
        if not 0.0 < self.ncut_threshold < 2.0:
            raise ValueError("ncut_threshold must lie in (0, 2)")
        if self.min_region < 1 or self.max_regions < 1 or self.n_splits < 1:
            raise ValueError("min_region, max_regions, n_splits must be >= 1")


@dataclass
class SparseAffinity:
    """Symmetric nonnegative pixel-similarity matrix with its degree vector."""

    n: int
    matrix: sp.csr_matrix
    degree: np.ndarray

    @classmethod
    def from_matrix(cls, matrix) -> "SparseAffinity":
        m = sp.csr_matrix(matrix, dtype=np.float64)
        m.setdiag(0.0)
        m.eliminate_zeros()
        if (abs(m - m.T) > 1e-12 * max(1.0, abs(m).max())).nnz:
            raise ValueError("affinity matrix must be symmetric")
        if m.nnz and m.data.min() < 0:
            raise ValueError("affinity weights must be nonnegative")
        degree = np.asarray(m.sum(axis=1)).ravel()
        return cls(m.shape[0], m, degree)

    def induced(self, idx: np.ndarray) -> "SparseAffinity":
        """Vertex-induced subgraph (degrees recomputed on the submatrix)."""
        sub = self.matrix[idx][:, idx].tocsr()
        degree = np.asarray(sub.sum(axis=1)).ravel()
        return SparseAffinity(len(idx), sub, degree)


@dataclass
class Partition:
    """Bipartition of the graph vertices; side[i] is True for the A side."""

    side: np.ndarray

    def __post_init__(self):
        self.side = np.asarray(self.side, dtype=bool)

    def complement(self) -> "Partition":
        return Partition(~self.side)


def build_affinity(feature: GrayImage, p: NcutParams) -> SparseAffinity:
    """Radius-gated intensity/spatial Gaussian affinity (strict distance < r)."""
    if feature.value_range != NORMALIZED:
        raise ValueError("affinity requires a normalized feature image")
    h, w = feature.height, feature.width
    n = h * w
    if n < 2:
        raise ValueError("image must have at least 2 pixels")
    f = feature.data
    diag = math.hypot(w, h)
    sx = p.sigma_x if p.sigma_x_in_pixels else p.sigma_x * diag
    si2 = p.sigma_i * p.sigma_i
    sx2 = sx * sx
    base = np.arange(n, dtype=np.int64).reshape(h, w)
    rows, cols, vals = [], [], []
    rmax = int(math.ceil(p.radius_r)) - 1
    for dy in range(0, rmax + 1):
        for dx in range(-rmax, rmax + 1):
            if dy == 0 and dx <= 0:
                continue
            d2 = dy * dy + dx * dx
            if not 0 < d2 < p.radius_r * p.radius_r:
                continue
            if dy >= h or abs(dx) >= w:
                continue
            ys = slice(0, h - dy)
            yd = slice(dy, h)
            if dx >= 0:
                xs, xd = slice(0, w - dx), slice(dx, w)
            else:
                xs, xd = slice(-dx, w), slice(0, w + dx)
            fi = f[ys, xs]
            fj = f[yd, xd]
            wgt = np.exp(-((fi - fj) ** 2) / si2 - d2 / sx2).ravel()
            i = base[ys, xs].ravel()
            j = base[yd, xd].ravel()
            rows.append(i)
            cols.append(j)
            vals.append(wgt)
    i = np.concatenate(rows)
    j = np.concatenate(cols)
    v = np.concatenate(vals)
    upper = sp.coo_matrix((v, (i, j)), shape=(n, n))
    matrix = (upper + upper.T).tocsr()
    degree = np.asarray(matrix.sum(axis=1)).ravel()
    return SparseAffinity(n, matrix, degree)


def cut_value(aff: SparseAffinity, part: Partition) -> float:
    """Total weight crossing the bipartition."""
    side = part.side
    if not side.any() or side.all():
        raise ValueError("both partition sides must be non-empty")
    x = side.astype(np.float64)
    y = 1.0 - x
    # Symmetrized form so a partition and its complement give the exact
    # same floating-point value.
    return 0.5 * (float(x @ (aff.matrix @ y)) + float(y @ (aff.matrix @ x)))


def ncut_value(aff: SparseAffinity, part: Partition) -> float:
    """cut(A,B) * (1/Vol(A) + 1/Vol(B))."""
    side = part.side
    cut = cut_value(aff, part)
    vol_a = float(aff.degree[side].sum())
    vol_b = float(aff.degree[~side].sum())
    if vol_a <= 0 or vol_b <= 0:
        raise ZeroVolumeError("partition side has zero volume")
    return cut * (1.0 / vol_a + 1.0 / vol_b)


def _residual_ok(aff, lam, y, tol):
    d = np.maximum(aff.degree, DEGREE_FLOOR)
    ly = d * y - aff.matrix @ y
    dy = d * y
    return float(np.linalg.norm(ly - lam * dy)) <= tol * float(np.linalg.norm(dy))


def fiedler_vector(aff: SparseAffinity, p: NcutParams):
    """Second generalized eigenpair of (D - W) y = lambda D y.

    Solved through the symmetric normalization; returns (lambda2, y).
    Raises DisconnectedGraphError when lambda2 vanishes because the graph
    has several components.
    """
    n = aff.n
    if n < 2:
        raise NcutError("graph must have at least 2 vertices")
    d = np.maximum(aff.degree, DEGREE_FLOOR)
    dsi = 1.0 / np.sqrt(d)
    if n <= p.dense_cutoff:
        a = aff.matrix.toarray() * dsi[:, None] * dsi[None, :]
        lsym = np.eye(n) - a
        vals, vecs = scipy.linalg.eigh(lsym, subset_by_index=[0, 1])
        lam = float(vals[1])
        z = vecs[:, 1]
    else:
        s = sp.diags(dsi) @ aff.matrix @ sp.diags(dsi)
        v0 = np.full(n, 1.0 / math.sqrt(n))
        lam = z = None
        tol = p.eig_tol
        for _ in range(3):
            mu, zz = spla.eigsh(s, k=2, which="LA", tol=tol, v0=v0)
            order = np.argsort(mu)[::-1]
            lam = float(1.0 - mu[order[1]])
            z = zz[:, order[1]]
            if _residual_ok(aff, lam, dsi * z, p.eig_tol):
                break
            tol *= 1e-3
    y = dsi * z
    if lam < 1e-10:
        ncomp, _ = csgraph.connected_components(aff.matrix, directed=False)
        if ncomp > 1:
            raise DisconnectedGraphError(f"graph has {ncomp} components")
    if not _residual_ok(aff, lam, y, max(p.eig_tol, 1e-8)):
        raise EigensolverError("Fiedler residual above tolerance")
    return lam, y


def best_threshold_split(aff: SparseAffinity, fiedler: np.ndarray, p: NcutParams):
    """Best partition over thresholded Fiedler values.

    Scans up to n_splits candidate thresholds (all distinct values when
    there are few enough, evenly spaced quantiles otherwise); ties break
    toward the more balanced partition, then the smaller threshold.
    """
    vals = np.unique(fiedler)
    if vals.size < 2:
        raise DegenerateSplitError("constant Fiedler vector")
    candidates = vals[:-1]  # splitting at the max is always one-sided
    if candidates.size > p.n_splits:
        pick = np.linspace(0, candidates.size - 1, p.n_splits)
        candidates = candidates[np.round(pick).astype(int)]
    best = None
    n = len(fiedler)
    for t in candidates:
        side = fiedler <= t
        na = int(side.sum())
        if na == 0 or na == n:
            continue
        try:
            value = ncut_value(aff, Partition(side))
        except ZeroVolumeError:
            continue
        key = (value, abs(2 * na - n), t)
        if best is None or key < best[0]:
            best = (key, side)
    if best is None:
        raise DegenerateSplitError("no valid threshold split")
    return Partition(best[1]), best[0][0]


def recursive_ncut_with_stats(feature: GrayImage, p: NcutParams):
    """Recursive bipartition driver; returns (LabelMap, accepted ncut values)."""
    aff = build_affinity(feature, p)
    n = aff.n
    final: list[np.ndarray] = []
    queue: list[np.ndarray] = [np.arange(n, dtype=np.int64)]
    accepted: list[float] = []
    while queue:
        idx = queue.pop(0)
        n_regions = len(queue) + len(final) + 1
        if n_regions >= p.max_regions or len(idx) < 2 * p.min_region:
            final.append(idx)
            continue
        sub = aff.induced(idx)
        ncomp, comp = csgraph.connected_components(sub.matrix, directed=False)
        if ncomp > 1:
            # Zero-cut split along components; peel the largest one off.
            largest = np.argmax(np.bincount(comp))
            side = comp == largest
            part, value = Partition(side), 0.0
        else:
            try:
                _, y = fiedler_vector(sub, p)
                part, value = best_threshold_split(sub, y, p)
            except (DegenerateSplitError, DisconnectedGraphError):
                final.append(idx)
                continue
        na = int(part.side.sum())
        if value <= p.ncut_threshold and min(na, len(idx) - na) >= p.min_region:
            accepted.append(value)
            queue.append(idx[part.side])
            queue.append(idx[~part.side])
        else:
            final.append(idx)
    labels = np.zeros(n, dtype=np.int32)
    for k, idx in enumerate(final, start=1):
        labels[idx] = k
    lm = LabelMap(feature.width, feature.height, labels.reshape(feature.height, feature.width))
    return lm, accepted


def recursive_ncut(feature: GrayImage, p: NcutParams) -> LabelMap:
    return recursive_ncut_with_stats(feature, p)[0]
