import numpy as np
import pytest

from scssc.core import PixelMatrix
from scssc.errors import InputError, NumericalError
from scssc.preprocess import (minmax_scale_channels, pca_fit_project,
                              unit_normalize)

from conftest import as_pixel_matrix


def covariance_eig_oracle(data):
    """Dense symmetric eigendecomposition of the sample covariance."""
    centered = data - data.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / (data.shape[1] - 1)
    evals, evecs = np.linalg.eigh(cov)
    return evals[::-1], evecs[:, ::-1]


class TestPca:
    def test_exact_subspace_reconstruction(self):
        rng = np.random.default_rng(0)
        basis, _ = np.linalg.qr(rng.standard_normal((10, 3)))
        offset = rng.standard_normal(10)
        data = basis[:, :3] @ rng.standard_normal((3, 40)) + offset[:, None]
        model, scores = pca_fit_project(as_pixel_matrix(data), 3)
        recon = model.basis @ scores.data + model.mean[:, None]
        assert np.abs(recon - data).max() < 1e-8

    def test_full_dim_preserves_distances(self):
        rng = np.random.default_rng(1)
        data = rng.standard_normal((6, 25))
        _, scores = pca_fit_project(as_pixel_matrix(data), 6)
        centered = data - data.mean(axis=1, keepdims=True)
        for j, k in [(0, 1), (3, 17), (9, 24)]:
            orig = np.linalg.norm(centered[:, j] - centered[:, k])
            proj = np.linalg.norm(scores.data[:, j] - scores.data[:, k])
            assert abs(orig - proj) < 1e-8

    def test_matches_covariance_eigensolver(self):
        rng = np.random.default_rng(42)
        cloud = rng.multivariate_normal(
            [0.0, 0.0], [[3.0, 1.2], [1.2, 1.0]], size=500).T
        model, _ = pca_fit_project(as_pixel_matrix(cloud), 2)
        evals, evecs = covariance_eig_oracle(cloud)
        np.testing.assert_allclose(model.explained_variance, evals, atol=1e-8)
        for col in range(2):
            v = evecs[:, col]
            v = v * np.sign(v[np.argmax(np.abs(v))])
            np.testing.assert_allclose(model.basis[:, col], v, atol=1e-8)

    def test_norm_nonexpansive(self):
        rng = np.random.default_rng(3)
        data = rng.standard_normal((12, 60))
        model, scores = pca_fit_project(as_pixel_matrix(data), 4)
        centered = data - model.mean[:, None]
        assert np.all(
            np.linalg.norm(scores.data, axis=0)
            <= np.linalg.norm(centered, axis=0) + 1e-10
        )

    def test_shared_eigenbasis_prefix(self):
        rng = np.random.default_rng(4)
        data = rng.standard_normal((16, 80))
        m3, s3 = pca_fit_project(as_pixel_matrix(data), 3)
        m8, s8 = pca_fit_project(as_pixel_matrix(data), 8)
        np.testing.assert_allclose(m3.basis, m8.basis[:, :3], atol=1e-10)
        np.testing.assert_allclose(s3.data, s8.data[:3], atol=1e-10)

    def test_errors(self):
        rng = np.random.default_rng(5)
        m = as_pixel_matrix(rng.standard_normal((4, 10)))
        with pytest.raises(InputError):
            pca_fit_project(m, 0)
        with pytest.raises(InputError):
            pca_fit_project(m, 5)
        constant = as_pixel_matrix(np.ones((4, 10)))
        with pytest.raises(NumericalError, match="zero variance"):
            pca_fit_project(constant, 2)


class TestUnitNormalize:
    def test_three_four_five(self):
        m = as_pixel_matrix(np.array([[3.0], [4.0]]))
        out = unit_normalize(m)
        np.testing.assert_allclose(out.data[:, 0], [0.6, 0.8])

    def test_idempotent(self):
        rng = np.random.default_rng(6)
        data = rng.standard_normal((5, 20))
        data /= np.linalg.norm(data, axis=0)
        out = unit_normalize(as_pixel_matrix(data))
        assert np.abs(out.data - data).max() < 1e-12

    def test_all_norms_one(self):
        rng = np.random.default_rng(7)
        out = unit_normalize(as_pixel_matrix(rng.standard_normal((9, 33))))
        np.testing.assert_allclose(np.linalg.norm(out.data, axis=0), 1.0,
                                   atol=1e-12)

    def test_zero_column_reports_index(self):
        data = np.ones((3, 4))
        data[:, 2] = 0.0
        with pytest.raises(InputError, match="pixel index 2"):
            unit_normalize(as_pixel_matrix(data))


class TestMinmax:
    def test_scales_to_unit_interval(self):
        rng = np.random.default_rng(8)
        img = rng.standard_normal((5, 6, 3)) * 4 + 2
        out = minmax_scale_channels(img)
        assert out.min() >= 0 and out.max() <= 1
        for ch in range(3):
            assert out[:, :, ch].min() == 0.0
            assert out[:, :, ch].max() == 1.0

    def test_constant_channel(self):
        img = np.ones((3, 3, 3))
        out = minmax_scale_channels(img)
        assert np.all(out == 0.0)
