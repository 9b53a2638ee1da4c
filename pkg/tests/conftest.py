import numpy as np
import pytest

from scssc.core import PixelMatrix
from scssc.lasso import warm_up_solver


@pytest.fixture(scope="session", autouse=True)
def _warm_solver():
    # compile the numba kernels once so timed tests measure math, not JIT
    warm_up_solver()


def unit_columns(rng, dim, count):
    """Random unit-norm columns."""
    cols = rng.standard_normal((dim, count))
    return cols / np.linalg.norm(cols, axis=0)


def subspace_columns(rng, ambient, sub_dim, counts, noise=0.0):
    """Unit-norm points drawn from one random subspace per entry of counts.

    Returns (D x N array, subspace id per column, list of bases).
    """
    bases = []
    blocks = []
    owners = []
    for s, count in enumerate(counts):
        q, _ = np.linalg.qr(rng.standard_normal((ambient, sub_dim)))
        basis = q[:, :sub_dim]
        bases.append(basis)
        pts = basis @ rng.standard_normal((sub_dim, count))
        pts /= np.linalg.norm(pts, axis=0)
        if noise > 0:
            pts = pts + noise * rng.standard_normal(pts.shape)
            pts /= np.linalg.norm(pts, axis=0)
        blocks.append(pts)
        owners.extend([s] * count)
    return np.hstack(blocks), np.array(owners), bases


def as_pixel_matrix(data):
    """Wrap a D x N array as a 1 x N strip image."""
    return PixelMatrix(np.ascontiguousarray(data, dtype=np.float64),
                       (1, data.shape[1]))
