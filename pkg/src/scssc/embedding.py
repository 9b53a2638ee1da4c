"""Coefficient smoothing and fast spectral clustering.

The N x N affinity A = C~^T C~ is never formed. Degrees come from
alpha = sum_j c~_j and D_i = c~_i^T alpha; the embedding is the top-k
right singular vectors of B = C~ D^{-1/2}, recovered from an M x M Gram
eigendecomposition (cost O(M^2 N) with M << N).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .core import CoefficientMatrix
from .errors import InputError, NumericalError

__all__ = [
    "DegreeVector",
    "smooth_coefficients",
    "normalize_abs_columns",
    "degrees",
    "spectral_embed",
    "kmeans",
]

DEGREE_FLOOR = 1e-12

_SMOOTH_CHUNK = 256


def _values(coeff) -> np.ndarray | sparse.spmatrix:
    return coeff.values if isinstance(coeff, CoefficientMatrix) else coeff


def _box_mean_axis(grids: np.ndarray, k: int, axis: int) -> np.ndarray:
    """Zero-padded mean over length-k windows anchored at floor((k-1)/2).

    out[i] averages in[i - a : i - a + k] with a = (k - 1) // 2, treating
    out-of-range samples as zero. Implemented with cumulative sums so the
    anchor is explicit (k may be even).
    """
    n = grids.shape[axis]
    anchor = (k - 1) // 2
    cs = np.cumsum(grids, axis=axis)
    pad_shape = list(grids.shape)
    pad_shape[axis] = 1
    cs = np.concatenate([np.zeros(pad_shape), cs], axis=axis)  # cs[t] = sum(in[:t])
    pos = np.arange(n)
    lo = np.clip(pos - anchor, 0, n)
    hi = np.clip(pos - anchor + k, 0, n)
    return (np.take(cs, hi, axis=axis) - np.take(cs, lo, axis=axis)) / k


def smooth_coefficients(coeff, geometry, kernel_size: int) -> CoefficientMatrix:
    """Average each coefficient row over K x K spatial windows.

    Rows are laid out on the image grid with the package pixel convention,
    cross-correlated with the (1/K^2) box kernel under zero padding, and
    flattened back. kernel_size 1 is the identity.
    """
    values = _values(coeff)
    nr, nc = geometry
    m, n = values.shape
    if n != nr * nc:
        raise InputError("coefficient columns do not match geometry")
    if kernel_size < 1:
        raise InputError("kernel size must be >= 1")
    if kernel_size > min(nr, nc):
        raise InputError(
            f"kernel size {kernel_size} exceeds image extent {min(nr, nc)}"
        )
    if kernel_size == 1:
        dense = values.toarray() if sparse.issparse(values) else np.array(values)
        return CoefficientMatrix(dense, "smoothed")

    rows_src = values.tocsr() if sparse.issparse(values) else values
    out = np.empty((m, n), dtype=np.float64)
    for start in range(0, m, _SMOOTH_CHUNK):
        stop = min(m, start + _SMOOTH_CHUNK)
        chunk = rows_src[start:stop]
        if sparse.issparse(chunk):
            chunk = chunk.toarray()
        chunk = np.asarray(chunk, dtype=np.float64)
        # row -> grid: row[c*nr + r] sits at grid[r, c]
        grids = chunk.reshape(stop - start, nc, nr).transpose(0, 2, 1)
        grids = _box_mean_axis(grids, kernel_size, axis=1)
        grids = _box_mean_axis(grids, kernel_size, axis=2)
        out[start:stop] = grids.transpose(0, 2, 1).reshape(stop - start, n)
    return CoefficientMatrix(out, "smoothed")


def normalize_abs_columns(coeff) -> CoefficientMatrix:
    """Absolute value followed by per-column L2 normalization.

    All-zero columns stay zero; their indices are carried on the result
    and a warning is emitted.
    """
    values = _values(coeff)
    dense = values.toarray() if sparse.issparse(values) else np.asarray(values)
    mags = np.abs(dense.astype(np.float64, copy=True))
    norms = np.linalg.norm(mags, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        warnings.warn(f"{zero.size} all-zero coefficient columns", RuntimeWarning)
    safe = norms.copy()
    safe[zero] = 1.0
    return CoefficientMatrix(mags / safe[None, :], "normalized", zero)


@dataclass(frozen=True)
class DegreeVector:
    """alpha = row sums of C~; degrees = implicit affinity row sums."""

    alpha: np.ndarray
    degrees: np.ndarray

    def __post_init__(self):
        if np.any(self.degrees < 0):
            raise NumericalError("negative degree")


def degrees(coeff) -> DegreeVector:
    """Affinity row sums computed without materializing C~^T C~.

    Degrees are floored at DEGREE_FLOOR so the later inversion is safe
    (only exact zeros from all-zero columns are lifted).
    """
    if isinstance(coeff, CoefficientMatrix) and coeff.stage != "normalized":
        raise InputError(f"degrees expect normalized coefficients, got '{coeff.stage}'")
    values = _values(coeff)
    if sparse.issparse(values):
        alpha = np.asarray(values.sum(axis=1)).ravel()
        deg = np.asarray(values.T @ alpha).ravel()
    else:
        alpha = values.sum(axis=1)
        deg = values.T @ alpha
    return DegreeVector(alpha, np.maximum(deg, DEGREE_FLOOR))


def spectral_embed(coeff, deg, k: int) -> np.ndarray:
    """Top-k right singular vectors of B = C~ diag(degrees)^{-1/2}.

    Computed from the M x M Gram matrix B B^T followed by right-vector
    recovery P = B^T U Sigma^{-1}; never touches an N x N matrix. Column
    signs are fixed so each vector's largest-magnitude entry is positive.
    """
    values = _values(coeff)
    d = deg.degrees if isinstance(deg, DegreeVector) else np.asarray(deg)
    m, n = values.shape
    if d.shape != (n,):
        raise InputError("degree length does not match column count")
    if not 1 <= k <= min(m, n):
        raise InputError(f"k={k} outside 1..{min(m, n)}")

    dinv_sqrt = 1.0 / np.sqrt(np.maximum(d, DEGREE_FLOOR))
    if sparse.issparse(values):
        B = values.multiply(dinv_sqrt[None, :]).tocsr()
        gram = np.asarray((B @ B.T).todense())
        B_T = B.T
    else:
        B = values * dinv_sqrt[None, :]
        gram = B @ B.T
        B_T = B.T

    evals, evecs = np.linalg.eigh(gram)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    tol = max(m, n) * np.finfo(np.float64).eps * max(evals[0], 0.0)
    rank = int(np.sum(evals > tol))
    if k > rank:
        raise NumericalError(
            f"requested {k} singular vectors but effective rank is {rank}"
        )
    sigma = np.sqrt(evals[:k])
    embedding = np.asarray(B_T @ evecs[:, :k]) / sigma[None, :]
    flip = np.sign(embedding[np.argmax(np.abs(embedding), axis=0),
                             np.arange(k)])
    flip[flip == 0] = 1.0
    return embedding * flip[None, :]


def _kmeanspp_init(points: np.ndarray, k: int, rng) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for t in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers[t] = points[idx]
        d2 = np.minimum(d2, ((points - centers[t]) ** 2).sum(axis=1))
    return centers


def _lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int, tol: float):
    n, k = points.shape[0], centers.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        point_d2 = d2[np.arange(n), labels]
        new_centers = centers.copy()
        counts = np.bincount(labels, minlength=k)
        for ci in range(k):
            if counts[ci] > 0:
                new_centers[ci] = points[labels == ci].mean(axis=0)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # deterministically reseed empty clusters on the farthest points
            order = np.argsort(-point_d2, kind="stable")
            for slot, ci in enumerate(empty):
                new_centers[ci] = points[order[slot]]
        move = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if move < tol and empty.size == 0:
            break
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels, inertia


def kmeans(points: np.ndarray, k: int, seed: int, restarts: int = 10,
           max_iter: int = 300, tol: float = 1e-8) -> np.ndarray:
    """Seeded k-means++ with Lloyd refinement; labels are 1-based.

    Runs `restarts` independent initializations from one seeded generator
    and keeps the lowest-inertia run, so results depend only on the seed.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise InputError("points must be 2-D")
    n = points.shape[0]
    if k < 1 or n < k:
        raise InputError(f"need at least k={k} points, got {n}")
    if np.unique(points, axis=0).shape[0] < k:
        warnings.warn(
            "fewer distinct points than clusters; some clusters degenerate",
            RuntimeWarning,
        )
    rng = np.random.default_rng(seed)
    best_labels = None
    best_inertia = np.inf
    for _ in range(max(1, restarts)):
        centers = _kmeanspp_init(points, k, rng)
        labels, inertia = _lloyd(points, centers, max_iter, tol)
        if inertia < best_inertia:
            best_inertia = inertia
            best_labels = labels
    return best_labels + 1
