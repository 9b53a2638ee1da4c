"""Feature reduction and normalization applied before clustering.

PCA is computed from the SVD of the centered pixel matrix rather than a
covariance eigendecomposition; the two agree but the SVD route is better
conditioned. Basis signs are fixed so each component's largest-magnitude
entry is positive, which makes fitted models reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PixelMatrix
from .errors import InputError, NumericalError

__all__ = ["PcaModel", "pca_fit_project", "unit_normalize", "minmax_scale_channels"]


@dataclass(frozen=True)
class PcaModel:
    """Affine projection onto the leading covariance eigendirections."""

    mean: np.ndarray             # length L
    basis: np.ndarray            # L x d, orthonormal columns
    explained_variance: np.ndarray  # length d, descending

    def __post_init__(self):
        l, d = self.basis.shape
        if self.mean.shape != (l,):
            raise InputError("PCA mean length does not match basis rows")
        if self.explained_variance.shape != (d,):
            raise InputError("explained_variance length does not match basis columns")
        gram = self.basis.T @ self.basis
        if not np.allclose(gram, np.eye(d), atol=1e-10):
            raise NumericalError("PCA basis is not orthonormal within 1e-10")
        if np.any(np.diff(self.explained_variance) > 1e-12):
            raise NumericalError("explained variance is not sorted descending")

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project(self, data: np.ndarray) -> np.ndarray:
        """Scores of columns of `data` (L x n) in the fitted basis."""
        return self.basis.T @ (data - self.mean[:, None])


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    # Make the largest-magnitude entry of each column positive.
    flip = np.sign(basis[np.argmax(np.abs(basis), axis=0), np.arange(basis.shape[1])])
    flip[flip == 0] = 1.0
    return basis * flip[None, :]


def pca_fit_project(matrix: PixelMatrix, d: int):
    """Fit PCA on the L x N pixel matrix and project it to d dimensions.

    Returns (PcaModel, PixelMatrix of scores with shape d x N).
    """
    X = matrix.data
    L, N = X.shape
    if N < 2:
        raise InputError("PCA requires at least two pixels")
    if not 1 <= d <= min(L, N):
        raise InputError(f"target dimension {d} outside 1..{min(L, N)}")

    mean = X.mean(axis=1)
    centered = X - mean[:, None]
    u, s, _ = np.linalg.svd(centered, full_matrices=False)
    scale = max(1.0, float(np.abs(X).max()))
    if s[0] <= max(L, N) * np.finfo(np.float64).eps * scale:
        raise NumericalError("zero variance: all pixels are identical")

    basis = _fix_signs(u[:, :d])
    variance = (s[:d] ** 2) / (N - 1)
    model = PcaModel(mean, basis, variance)
    scores = basis.T @ centered
    return model, PixelMatrix(np.ascontiguousarray(scores), matrix.geometry)


def unit_normalize(matrix: PixelMatrix) -> PixelMatrix:
    """Scale every column to unit Euclidean norm; zero columns are rejected."""
    norms = np.linalg.norm(matrix.data, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise InputError(f"zero column at pixel index {int(zero[0])}")
    return PixelMatrix(matrix.data / norms[None, :], matrix.geometry)


def minmax_scale_channels(image: np.ndarray) -> np.ndarray:
    """Scale each channel of an (Nr, Nc, ch) image to [0, 1] independently.

    A constant channel maps to all zeros.
    """
    image = np.asarray(image, dtype=np.float64)
    lo = image.min(axis=(0, 1), keepdims=True)
    hi = image.max(axis=(0, 1), keepdims=True)
    span = hi - lo
    span[span == 0] = 1.0
    return (image - lo) / span
