"""Per-superpixel selection of representative pixels (exemplars).

Within each segment the selector greedily minimizes the maximum
self-representation cost: it starts from the medoid, then repeatedly adds
the member whose cost against the current picks is largest. A lazy
variant keeps stale cost bounds sorted and stops each scan as soon as the
best recomputed cost dominates the next bound; because costs only shrink
as the dictionary grows, the lazy and exhaustive strategies pick the same
sequence. Ties always break toward the lowest pixel index.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .core import PixelMatrix
from .errors import InputError
from .lasso import objective_from_gram
from .superpixels import SegmentationMap, segment_indices

__all__ = ["ExemplarDictionary", "medoid", "select_exemplars",
           "build_dictionary", "save_exemplars_csv"]


@dataclass(frozen=True)
class ExemplarDictionary:
    """Selected exemplars: global indices grouped by segment in pick order."""

    indices: np.ndarray      # length M
    features: np.ndarray     # D x M
    per_segment: np.ndarray  # length E, per-segment pick counts
    rho: float
    segment_ids: np.ndarray  # length M, owning segment of each atom

    def __post_init__(self):
        m = self.indices.size
        if m == 0:
            raise InputError("dictionary is empty")
        if self.features.shape[1] != m or self.segment_ids.shape != (m,):
            raise InputError("dictionary field shapes disagree")
        if int(self.per_segment.sum()) != m:
            raise InputError("per-segment counts do not sum to the atom count")
        if not 0.0 < self.rho < 1.0:
            raise InputError("rho must lie in (0, 1)")

    @property
    def size(self) -> int:
        return self.indices.size


def _medoid_local(cols: np.ndarray) -> int:
    # Closest member to the segment mean == minimizer of total squared
    # distance to all members. np.argmin keeps the lowest index on ties.
    mu = cols.mean(axis=1)
    d = ((cols - mu[:, None]) ** 2).sum(axis=0)
    return int(np.argmin(d))


def medoid(matrix: PixelMatrix, indices: np.ndarray) -> int:
    """Global index of the segment member closest to the segment mean."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise InputError("empty segment")
    return int(indices[_medoid_local(matrix.data[:, indices])])


def exemplar_count(rho: float, segment_size: int) -> int:
    """floor(rho * N_e), clamped so every segment contributes at least one."""
    return max(1, int(np.floor(rho * segment_size)))


def select_exemplars(matrix: PixelMatrix, indices: np.ndarray, rho: float,
                     tau: float, tol: float = 1e-6,
                     lazy: bool = True) -> np.ndarray:
    """Pick the exemplars of one segment, in selection order.

    `indices` are the (ascending) global pixel indices of the segment.
    With lazy=False every candidate cost is recomputed every round; the
    two strategies share the exact same cost evaluations and therefore
    return identical sequences.
    """
    indices = np.asarray(indices, dtype=np.int64)
    ne = indices.size
    if ne == 0:
        raise InputError("empty segment")
    if not 0.0 < rho < 1.0:
        raise InputError(f"rho must lie in (0, 1), got {rho}")
    if tau <= 1.0:
        raise InputError(f"tau must exceed 1, got {tau}")
    m_e = exemplar_count(rho, ne)

    cols = matrix.data[:, indices]
    med = _medoid_local(cols)
    selected = [med]
    if m_e > 1:
        gram = np.ascontiguousarray(cols.T @ cols)
        picked = np.zeros(ne, dtype=bool)
        picked[med] = True
        # stale upper bounds: cost of every member against {medoid}
        bounds = np.empty(ne)
        for k in range(ne):
            bounds[k], _ = objective_from_gram(gram, selected, k, tau, tol)

        for _ in range(m_e - 1):
            candidates = np.flatnonzero(~picked)
            if lazy:
                order = candidates[np.lexsort((candidates, -bounds[candidates]))]
            else:
                order = candidates
            best_cost = -np.inf
            best_k = -1
            for pos, k in enumerate(order):
                cost, _ = objective_from_gram(gram, selected, int(k), tau, tol)
                bounds[k] = cost
                if cost > best_cost or (cost == best_cost and k < best_k):
                    best_cost = cost
                    best_k = int(k)
                if lazy and pos + 1 < len(order):
                    # Solver values can exceed a stale bound by at most the
                    # stopping tolerance, so a tol margin keeps the scan
                    # exact even for duplicated pixels.
                    if best_cost - tol > bounds[order[pos + 1]]:
                        break
            selected.append(best_k)
            picked[best_k] = True

    return indices[np.array(selected, dtype=np.int64)]


def build_dictionary(matrix: PixelMatrix, segmap: SegmentationMap, rho: float,
                     tau: float, tol: float = 1e-6,
                     lazy: bool = True) -> ExemplarDictionary:
    """Concatenate per-segment selections in ascending segment order."""
    all_indices = []
    per_segment = np.zeros(segmap.E, dtype=np.int64)
    seg_ids = []
    for e in range(1, segmap.E + 1):
        chosen = select_exemplars(matrix, segment_indices(segmap, e), rho, tau,
                                  tol=tol, lazy=lazy)
        all_indices.append(chosen)
        per_segment[e - 1] = chosen.size
        seg_ids.append(np.full(chosen.size, e, dtype=np.int64))
    indices = np.concatenate(all_indices)
    features = np.ascontiguousarray(matrix.data[:, indices])
    return ExemplarDictionary(indices, features, per_segment, rho,
                              np.concatenate(seg_ids))


def save_exemplars_csv(dictionary: ExemplarDictionary, path: str) -> None:
    """Dump 'segment,pixel,round' rows (round = pick order within segment)."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("segment,pixel,round\n")
        pos = 0
        for seg, count in enumerate(dictionary.per_segment, start=1):
            for rnd in range(int(count)):
                fh.write(f"{seg},{int(dictionary.indices[pos])},{rnd}\n")
                pos += 1
