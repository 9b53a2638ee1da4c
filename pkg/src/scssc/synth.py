"""Synthetic scenes: unit-norm points from random low-dimensional subspaces,
tiled into rectangular spatial blocks so neighboring pixels share a class.

Everything is driven by one seeded generator in a fixed order, so a given
seed always reproduces the same scene byte for byte.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .core import GroundTruth, SpectralCube
from .errors import InputError, NumericalError
from .fileio import write_envi, write_labels_csv

__all__ = ["make_subspace_scene", "write_scene"]


def _default_block_grid(n_classes: int):
    rows = int(math.floor(math.sqrt(n_classes)))
    return rows, int(math.ceil(n_classes / rows))


def make_subspace_scene(n_classes: int = 4, ambient_dim: int = 30,
                        subspace_dim: int = 3, rows: int = 70, cols: int = 70,
                        block_grid=None, noise: float = 0.01, seed: int = 0):
    """Generate (SpectralCube, GroundTruth, bases).

    Each class owns a random orthonormal basis of a subspace_dim-dimensional
    subspace of R^ambient_dim; pixels are unit-norm points of their block's
    subspace plus isotropic Gaussian noise of scale `noise`. Blocks tile the
    image on a block_grid (near-square by default), classes assigned
    cyclically.
    """
    if subspace_dim >= ambient_dim:
        raise InputError("subspace dimension must be below the ambient dimension")
    if subspace_dim < 1 or n_classes < 1 or rows < 1 or cols < 1:
        raise InputError("all scene dimensions must be positive")
    if noise < 0:
        raise InputError("noise level must be nonnegative")
    if block_grid is None:
        block_grid = _default_block_grid(n_classes)
    b_rows, b_cols = block_grid
    if b_rows * b_cols < n_classes:
        raise InputError(
            f"block grid {block_grid} cannot host {n_classes} classes"
        )
    if b_rows > rows or b_cols > cols:
        raise InputError(f"block grid {block_grid} exceeds image {rows}x{cols}")

    rng = np.random.default_rng(seed)
    bases = []
    for _ in range(n_classes):
        q, _ = np.linalg.qr(rng.standard_normal((ambient_dim, subspace_dim)))
        bases.append(np.ascontiguousarray(q[:, :subspace_dim]))

    row_edges = (np.arange(b_rows + 1) * rows) // b_rows
    col_edges = (np.arange(b_cols + 1) * cols) // b_cols
    label_grid = np.zeros((rows, cols), dtype=np.int64)
    for bi in range(b_rows):
        for bj in range(b_cols):
            cls = (bi * b_cols + bj) % n_classes + 1
            label_grid[row_edges[bi]:row_edges[bi + 1],
                       col_edges[bj]:col_edges[bj + 1]] = cls

    n = rows * cols
    labels = label_grid.reshape(-1, order="F")
    coeffs = rng.standard_normal((n, subspace_dim))
    points = np.zeros((n, ambient_dim))
    for cls in range(1, n_classes + 1):
        mask = labels == cls
        points[mask] = coeffs[mask] @ bases[cls - 1].T
    norms = np.linalg.norm(points, axis=1)
    if np.any(norms < 1e-12):
        raise NumericalError("degenerate zero-norm sample; change the seed")
    points /= norms[:, None]
    if noise > 0:
        points += noise * rng.standard_normal((n, ambient_dim))

    values = points.reshape(cols, rows, ambient_dim).transpose(1, 0, 2)
    cube = SpectralCube(rows, cols, ambient_dim, np.ascontiguousarray(values))
    return cube, GroundTruth(labels, n_classes), bases


def write_scene(cube: SpectralCube, gt: GroundTruth, out_dir: str,
                stem: str = "scene", manifest: dict | None = None) -> dict:
    """Write the scene as float64 ENVI plus a row-major ground-truth CSV."""
    os.makedirs(out_dir, exist_ok=True)
    hdr = os.path.join(out_dir, f"{stem}.hdr")
    write_envi(cube, hdr, dtype="float64", interleave="bsq", byte_order=0)
    gt_path = os.path.join(out_dir, f"{stem}_gt.csv")
    grid = gt.labels.reshape(cube.rows, cube.cols, order="F")
    write_labels_csv(grid, gt_path)
    paths = {"header": hdr, "data": hdr[:-4] + ".img", "gt": gt_path}
    if manifest is not None:
        man_path = os.path.join(out_dir, f"{stem}_manifest.json")
        with open(man_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths["manifest"] = man_path
    return paths
