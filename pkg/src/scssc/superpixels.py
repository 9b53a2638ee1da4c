"""SLIC superpixel segmentation of a 3-channel feature image.

The clustering runs in joint (channel, row, col) space with distance
d^2 = d_color^2 + (d_xy / S)^2 * compactness^2, grid-initialized centers
at spacing S = sqrt(N/E), seeds perturbed to the lowest-gradient spot in
a 3x3 neighborhood, 2S x 2S search windows, a fixed number of iterations,
and a final connectivity pass that folds undersized components into their
largest neighbor. There is no randomness anywhere, so identical inputs
always produce identical maps.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .core import reshape_row_to_grid
from .errors import InputError
from .fileio import write_labels_csv, write_ppm

__all__ = ["SegmentationMap", "slic", "segment_indices", "save_segmentation"]


@dataclass(frozen=True)
class SegmentationMap:
    """Per-pixel segment ids in 1..E over the column-major pixel order."""

    assignments: np.ndarray
    E: int
    sizes: np.ndarray
    geometry: tuple

    def __post_init__(self):
        nr, nc = self.geometry
        a = self.assignments
        if a.shape != (nr * nc,):
            raise InputError("assignment length does not match geometry")
        if self.E < 1:
            raise InputError("segment count must be positive")
        counts = np.bincount(a, minlength=self.E + 1)
        if counts[0] > 0 or a.max() > self.E:
            raise InputError("assignments must lie in 1..E")
        if np.any(counts[1:] == 0):
            raise InputError("every segment must be nonempty")
        if self.sizes.shape != (self.E,) or not np.array_equal(self.sizes, counts[1:]):
            raise InputError("stored sizes disagree with assignments")
        grid = reshape_row_to_grid(a, self.geometry)
        n_comp, _ = _equal_value_components(grid)
        if n_comp != self.E:
            raise InputError(
                f"segments are not 4-connected ({n_comp} components for {self.E} segments)"
            )


def _equal_value_components(grid: np.ndarray):
    """Connected components (4-neighborhood) of equal-valued grid cells."""
    nr, nc = grid.shape
    n = nr * nc
    idx = np.arange(n).reshape(nr, nc, order="F")
    rows = []
    cols = []
    if nr > 1:
        mask = grid[:-1, :] == grid[1:, :]
        rows.append(idx[:-1, :][mask])
        cols.append(idx[1:, :][mask])
    if nc > 1:
        mask = grid[:, :-1] == grid[:, 1:]
        rows.append(idx[:, :-1][mask])
        cols.append(idx[:, 1:][mask])
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = np.empty(0, dtype=np.int64)
        c = np.empty(0, dtype=np.int64)
    graph = coo_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(n, n))
    n_comp, comp_flat = connected_components(graph, directed=False)
    return n_comp, comp_flat.reshape(nr, nc, order="F")


def _seed_grid(nr: int, nc: int, n_segments: int):
    """Near-square seed lattice with at least n_segments sites."""
    n_rows = max(1, int(round(math.sqrt(n_segments * nr / nc))))
    n_cols = int(math.ceil(n_segments / n_rows))
    n_rows = min(n_rows, nr)
    n_cols = min(n_cols, nc)
    while n_rows * n_cols < n_segments and (n_rows < nr or n_cols < nc):
        if n_rows < nr and (n_cols >= nc or n_rows / nr <= n_cols / nc):
            n_rows += 1
        else:
            n_cols += 1
    seed_r = np.floor((np.arange(n_rows) + 0.5) * nr / n_rows).astype(np.int64)
    seed_c = np.floor((np.arange(n_cols) + 0.5) * nc / n_cols).astype(np.int64)
    rr, cc = np.meshgrid(seed_r, seed_c, indexing="ij")
    return rr.ravel(), cc.ravel()


_PERTURB_OFFSETS = [(0, 0), (-1, -1), (-1, 0), (-1, 1), (0, -1),
                    (0, 1), (1, -1), (1, 0), (1, 1)]


def _perturb_seeds(image: np.ndarray, seeds_r, seeds_c):
    """Move each seed to the lowest-gradient cell in its 3x3 neighborhood."""
    padded = np.pad(image, ((1, 1), (1, 1), (0, 0)), mode="edge")
    dr = padded[2:, 1:-1] - padded[:-2, 1:-1]
    dc = padded[1:-1, 2:] - padded[1:-1, :-2]
    grad = (dr ** 2).sum(axis=2) + (dc ** 2).sum(axis=2)
    nr, nc = grad.shape
    out_r = seeds_r.copy()
    out_c = seeds_c.copy()
    for k in range(len(seeds_r)):
        best = np.inf
        for offr, offc in _PERTURB_OFFSETS:
            r = seeds_r[k] + offr
            c = seeds_c[k] + offc
            if 0 <= r < nr and 0 <= c < nc and grad[r, c] < best:
                best = grad[r, c]
                out_r[k], out_c[k] = r, c
    return out_r, out_c


def slic(image: np.ndarray, n_segments: int, compactness: float = 10.0,
         n_iter: int = 10) -> SegmentationMap:
    """Segment an (Nr, Nc, 3) image (channels scaled to [0, 1]) into superpixels.

    The realized segment count can differ from the request after the
    connectivity pass; it is reported in the returned map.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise InputError("expected an (Nr, Nc, 3) image")
    if not np.all(np.isfinite(image)):
        raise InputError("image contains non-finite values")
    nr, nc, _ = image.shape
    n = nr * nc
    if not 1 <= n_segments <= n:
        raise InputError(f"segment request {n_segments} outside 1..{n}")
    if compactness <= 0:
        raise InputError("compactness must be positive")

    spacing = math.sqrt(n / n_segments)
    seeds_r, seeds_c = _seed_grid(nr, nc, n_segments)
    seeds_r, seeds_c = _perturb_seeds(image, seeds_r, seeds_c)

    k = len(seeds_r)
    pos = np.stack([seeds_r.astype(np.float64), seeds_c.astype(np.float64)], axis=1)
    colors = image[seeds_r, seeds_c, :].copy()
    spatial_w = (compactness / spacing) ** 2

    row_coord = np.arange(nr, dtype=np.float64)
    col_coord = np.arange(nc, dtype=np.float64)

    labels = np.zeros((nr, nc), dtype=np.int64)
    for _ in range(n_iter):
        dist = np.full((nr, nc), np.inf)
        labels.fill(-1)
        for ci in range(k):
            cr, cc = pos[ci]
            r0 = max(0, int(math.floor(cr - spacing)))
            r1 = min(nr, int(math.floor(cr + spacing)) + 1)
            c0 = max(0, int(math.floor(cc - spacing)))
            c1 = min(nc, int(math.floor(cc + spacing)) + 1)
            if r0 >= r1 or c0 >= c1:
                continue
            window = image[r0:r1, c0:c1, :]
            d_color = ((window - colors[ci]) ** 2).sum(axis=2)
            d_xy = (row_coord[r0:r1, None] - cr) ** 2 + (col_coord[None, c0:c1] - cc) ** 2
            d2 = d_color + spatial_w * d_xy
            better = d2 < dist[r0:r1, c0:c1]
            dist[r0:r1, c0:c1][better] = d2[better]
            labels[r0:r1, c0:c1][better] = ci

        missing = labels < 0
        if missing.any():
            mr, mc = np.nonzero(missing)
            best = np.full(mr.size, np.inf)
            pick = np.zeros(mr.size, dtype=np.int64)
            feats = image[mr, mc, :]
            for ci in range(k):
                d2 = ((feats - colors[ci]) ** 2).sum(axis=1) \
                    + spatial_w * ((mr - pos[ci, 0]) ** 2 + (mc - pos[ci, 1]) ** 2)
                closer = d2 < best
                best[closer] = d2[closer]
                pick[closer] = ci
            labels[mr, mc] = pick

        flat = labels.ravel()
        counts = np.bincount(flat, minlength=k).astype(np.float64)
        nonempty = counts > 0
        for ch in range(3):
            sums = np.bincount(flat, weights=image[:, :, ch].ravel(), minlength=k)
            colors[nonempty, ch] = sums[nonempty] / counts[nonempty]
        rsum = np.bincount(flat, weights=np.broadcast_to(
            row_coord[:, None], (nr, nc)).ravel(), minlength=k)
        csum = np.bincount(flat, weights=np.broadcast_to(
            col_coord[None, :], (nr, nc)).ravel(), minlength=k)
        pos[nonempty, 0] = rsum[nonempty] / counts[nonempty]
        pos[nonempty, 1] = csum[nonempty] / counts[nonempty]

    assignments = _enforce_connectivity(labels, spacing ** 2 / 4.0)
    sizes = np.bincount(assignments)[1:]
    return SegmentationMap(assignments, int(assignments.max()), sizes, (nr, nc))


def _enforce_connectivity(labels: np.ndarray, min_size: float) -> np.ndarray:
    """Split disconnected segments, then merge components smaller than
    min_size into their largest adjacent component."""
    nr, nc = labels.shape
    _, comp = _equal_value_components(labels)
    comp_flat = comp.reshape(-1, order="F")
    n_comp = int(comp_flat.max()) + 1

    size = np.bincount(comp_flat, minlength=n_comp).astype(np.int64)
    first_pixel = np.full(n_comp, nr * nc, dtype=np.int64)
    np.minimum.at(first_pixel, comp_flat, np.arange(nr * nc))

    neighbors = [set() for _ in range(n_comp)]
    if nr > 1:
        a = comp[:-1, :].ravel()
        b = comp[1:, :].ravel()
        for x, y in zip(a[a != b], b[a != b]):
            neighbors[x].add(int(y))
            neighbors[y].add(int(x))
    if nc > 1:
        a = comp[:, :-1].ravel()
        b = comp[:, 1:].ravel()
        for x, y in zip(a[a != b], b[a != b]):
            neighbors[x].add(int(y))
            neighbors[y].add(int(x))

    parent = np.arange(n_comp, dtype=np.int64)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return int(x)

    while True:
        roots = sorted({find(x) for x in range(n_comp)})
        mergeable = []
        for root in roots:
            if size[root] >= min_size:
                continue
            nbr_roots = {find(x) for x in neighbors[root]} - {root}
            if nbr_roots:
                mergeable.append((int(size[root]), int(first_pixel[root]), root, nbr_roots))
        if not mergeable:
            break
        _, _, root, nbr_roots = min(mergeable)
        target = min(nbr_roots, key=lambda t: (-size[t], first_pixel[t]))
        parent[root] = target
        size[target] += size[root]
        first_pixel[target] = min(first_pixel[target], first_pixel[root])
        neighbors[target] |= neighbors[root]

    root_flat = np.array([find(x) for x in comp_flat], dtype=np.int64)
    _, first_idx = np.unique(root_flat, return_index=True)
    order = root_flat[np.sort(first_idx)]
    relabel = np.zeros(n_comp, dtype=np.int64)
    relabel[order] = np.arange(1, order.size + 1)
    return relabel[root_flat]


def segment_indices(segmap: SegmentationMap, e: int) -> np.ndarray:
    """Ascending pixel indices belonging to segment e."""
    if not 1 <= e <= segmap.E:
        raise InputError(f"unknown segment id {e} (have 1..{segmap.E})")
    return np.flatnonzero(segmap.assignments == e)


def save_segmentation(segmap: SegmentationMap, out_dir: str, stem: str = "segments",
                      image: np.ndarray | None = None) -> dict:
    """Debug dump: segment-id CSV plus a boundary-overlay PPM."""
    os.makedirs(out_dir, exist_ok=True)
    grid = reshape_row_to_grid(segmap.assignments, segmap.geometry)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    write_labels_csv(grid, csv_path)

    nr, nc = segmap.geometry
    if image is not None:
        base = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
        rgb = (base * 255).astype(np.uint8)
    else:
        rgb = np.full((nr, nc, 3), 255, dtype=np.uint8)
    boundary = np.zeros((nr, nc), dtype=bool)
    boundary[:-1, :] |= grid[:-1, :] != grid[1:, :]
    boundary[:, :-1] |= grid[:, :-1] != grid[:, 1:]
    rgb = rgb.copy()
    rgb[boundary] = (255, 0, 0)
    ppm_path = os.path.join(out_dir, f"{stem}.ppm")
    write_ppm(rgb, ppm_path)
    return {"csv": csv_path, "ppm": ppm_path}
