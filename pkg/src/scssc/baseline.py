"""Small-scale full self-expressive clustering baseline.

Codes every pixel against all other pixels (self-match excluded), builds
the symmetric affinity |C| + |C|^T, and clusters with a dense normalized
spectral embedding. Cubic in N, so it is capped by default; it exists as
a reference for correctness checks and scaling comparisons.
"""

from __future__ import annotations

import time

import numpy as np

from .core import PixelMatrix
from .embedding import kmeans
from .errors import InputError, NumericalError
from .lasso import SPARSE_DROP_TOL, _cd_gram_batch

__all__ = ["ssc_small_oracle", "full_self_representation"]

DEFAULT_N_CAP = 3000


def full_self_representation(data: np.ndarray, tau: float,
                             tol: float = 1e-6) -> np.ndarray:
    """N x N coefficient matrix with each column coded on all other columns."""
    X = np.ascontiguousarray(data, dtype=np.float64)
    n = X.shape[1]
    norms = np.linalg.norm(X, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-8):
        raise InputError("columns must be unit-norm")
    G = np.ascontiguousarray(X.T @ X)
    xsq = np.ascontiguousarray(np.diag(G))
    bans = np.arange(n, dtype=np.int64)  # never select yourself
    C, _, gaps, kkts = _cd_gram_batch(G, G, xsq, 1.0 / tau, tol, 10_000, bans)
    bad = np.flatnonzero((gaps > tol) | (kkts > tol))
    if bad.size:
        raise NumericalError(f"self-representation failed for column {int(bad[0])}")
    C[np.abs(C) < SPARSE_DROP_TOL] = 0.0
    return C


def ssc_small_oracle(matrix, tau: float, k: int, tol: float = 1e-6,
                     seed: int = 0, restarts: int = 10,
                     max_n: int = DEFAULT_N_CAP,
                     timings: dict | None = None) -> np.ndarray:
    """Full self-expressive subspace clustering, restricted to small N.

    `matrix` is a PixelMatrix or a (D, N) array with unit-norm columns.
    Raises InputError when N exceeds max_n (override the cap explicitly
    for scaling studies). When a dict is passed as `timings`, per-phase
    seconds are recorded into it.
    """
    data = matrix.data if isinstance(matrix, PixelMatrix) else np.asarray(matrix)
    n = data.shape[1]
    if n > max_n:
        raise InputError(f"N={n} exceeds the baseline cap {max_n}")
    if k < 1 or k > n:
        raise InputError(f"cluster count {k} outside 1..{n}")

    t0 = time.perf_counter()
    C = full_self_representation(data, tau, tol)
    t1 = time.perf_counter()

    affinity = np.abs(C)
    affinity += affinity.T
    deg = affinity.sum(axis=1)
    dinv = 1.0 / np.sqrt(np.maximum(deg, 1e-12))
    sym = affinity * dinv[:, None] * dinv[None, :]
    evals, evecs = np.linalg.eigh(sym)
    embedding = evecs[:, ::-1][:, :k]
    labels = kmeans(embedding, k, seed=seed, restarts=restarts)
    t2 = time.perf_counter()

    if timings is not None:
        timings["coding"] = t1 - t0
        timings["clustering"] = t2 - t1
        timings["total"] = t2 - t0
    return labels
