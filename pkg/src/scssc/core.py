"""Domain types and the pixel linearization convention.

A scene with Nr rows and Nc columns is flattened column-major: spatial cell
(r, c) maps to pixel index j = c*Nr + r. Every reshape in the package goes
through the helpers here so the convention cannot drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError

__all__ = [
    "SpectralCube",
    "PixelMatrix",
    "GroundTruth",
    "ClusterResult",
    "CoefficientMatrix",
    "pixel_index",
    "pixel_position",
    "vectorize",
    "unvectorize",
    "reshape_row_to_grid",
    "reshape_grid_to_row",
]


def pixel_index(r, c, geometry):
    """Linear pixel index of spatial cell (r, c) for geometry (Nr, Nc)."""
    nr, nc = geometry
    r = np.asarray(r)
    c = np.asarray(c)
    if np.any(r < 0) or np.any(r >= nr) or np.any(c < 0) or np.any(c >= nc):
        raise InputError(f"cell out of range for geometry {geometry}")
    return c * nr + r


def pixel_position(j, geometry):
    """Inverse of pixel_index: (r, c) of linear index j."""
    nr, nc = geometry
    j = np.asarray(j)
    if np.any(j < 0) or np.any(j >= nr * nc):
        raise InputError(f"pixel index out of range for geometry {geometry}")
    return j % nr, j // nr


@dataclass(frozen=True)
class SpectralCube:
    """Raw scene: reflectance values of shape (Nr, Nc, L)."""

    rows: int
    cols: int
    bands: int
    values: np.ndarray
    wavelengths: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.bands < 1:
            raise InputError("cube dimensions must be positive")
        if self.values.shape != (self.rows, self.cols, self.bands):
            raise InputError(
                f"value array shape {self.values.shape} does not match "
                f"({self.rows}, {self.cols}, {self.bands})"
            )
        if not np.all(np.isfinite(self.values)):
            raise InputError("cube contains non-finite values")
        if self.wavelengths is not None and len(self.wavelengths) != self.bands:
            raise InputError("wavelength count does not match band count")

    @property
    def geometry(self):
        return (self.rows, self.cols)

    @property
    def n_pixels(self) -> int:
        return self.rows * self.cols

    def crop(self, r0: int, c0: int, height: int, width: int) -> "SpectralCube":
        """Spatial crop; band axis is untouched."""
        if height < 1 or width < 1 or r0 < 0 or c0 < 0 \
                or r0 + height > self.rows or c0 + width > self.cols:
            raise InputError(
                f"crop ({r0},{c0},{height},{width}) exceeds scene {self.rows}x{self.cols}"
            )
        sub = np.ascontiguousarray(self.values[r0:r0 + height, c0:c0 + width, :])
        return SpectralCube(height, width, self.bands, sub, self.wavelengths)


@dataclass(frozen=True)
class PixelMatrix:
    """Column-per-pixel feature matrix, D x N, with the source geometry."""

    data: np.ndarray
    geometry: tuple

    def __post_init__(self):
        if self.data.ndim != 2:
            raise InputError("pixel matrix must be 2-D")
        nr, nc = self.geometry
        if self.data.shape[1] != nr * nc:
            raise InputError(
                f"column count {self.data.shape[1]} does not match geometry {self.geometry}"
            )

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.data[:, j]


@dataclass(frozen=True)
class GroundTruth:
    """Per-pixel integer labels; ignore_label marks unlabeled ground."""

    labels: np.ndarray
    num_classes: int
    ignore_label: int = 0

    def __post_init__(self):
        if self.labels.ndim != 1:
            raise InputError("ground-truth labels must be a 1-D array")
        lab = self.labels
        valid = lab[lab != self.ignore_label]
        if valid.size and (valid.min() < 1 or valid.max() > self.num_classes):
            raise InputError(
                f"labels outside 1..{self.num_classes} (ignore={self.ignore_label})"
            )

    @property
    def n(self) -> int:
        return self.labels.size

    def labeled_mask(self) -> np.ndarray:
        return self.labels != self.ignore_label


@dataclass
class ClusterResult:
    """Final per-pixel cluster labels plus per-stage wall-clock timings."""

    labels: np.ndarray
    timings: dict
    params: object
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.labels.ndim != 1 or self.labels.size == 0:
            raise InputError("labels must be a nonempty 1-D array")
        if np.any(self.labels < 1):
            raise InputError("cluster labels must be >= 1")


_COEFF_STAGES = ("raw", "smoothed", "normalized")


@dataclass(frozen=True)
class CoefficientMatrix:
    """M x N representation coefficients, tagged with the processing stage.

    `values` may be a dense ndarray or a scipy sparse matrix. In the
    'normalized' stage every nonzero column has unit L2 norm and all
    entries are nonnegative; all-zero columns are listed in zero_columns.
    """

    values: object
    stage: str
    zero_columns: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.stage not in _COEFF_STAGES:
            raise InputError(f"unknown coefficient stage '{self.stage}'")
        if getattr(self.values, "ndim", None) != 2:
            raise InputError("coefficient values must be a 2-D matrix")

    @property
    def shape(self):
        return self.values.shape


def vectorize(cube: SpectralCube) -> PixelMatrix:
    """Rearrange the cube into an L x N matrix, one spectral pixel per column."""
    nr, nc, nb = cube.rows, cube.cols, cube.bands
    flat = cube.values.reshape(nr * nc, nb, order="F")  # row j = pixel j's spectrum
    return PixelMatrix(np.ascontiguousarray(flat.T), (nr, nc))


def unvectorize(matrix: PixelMatrix, wavelengths=None) -> SpectralCube:
    """Inverse of vectorize; matrix dim becomes the band count."""
    nr, nc = matrix.geometry
    nb = matrix.dim
    values = matrix.data.T.reshape(nr, nc, nb, order="F")
    return SpectralCube(nr, nc, nb, np.ascontiguousarray(values), wavelengths)


def reshape_row_to_grid(row: np.ndarray, geometry) -> np.ndarray:
    """Lay a length-N vector out on the spatial grid: grid[r, c] = row[c*Nr + r]."""
    nr, nc = geometry
    row = np.asarray(row)
    if row.ndim != 1 or row.size != nr * nc:
        raise InputError(f"row length {row.size} does not match geometry {geometry}")
    return row.reshape(nr, nc, order="F")


def reshape_grid_to_row(grid: np.ndarray, geometry=None) -> np.ndarray:
    """Inverse of reshape_row_to_grid."""
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise InputError("grid must be 2-D")
    if geometry is not None and grid.shape != tuple(geometry):
        raise InputError(f"grid shape {grid.shape} does not match geometry {geometry}")
    return grid.reshape(-1, order="F")
