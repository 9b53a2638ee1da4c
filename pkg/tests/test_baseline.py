import numpy as np
import pytest

from scssc.baseline import full_self_representation, ssc_small_oracle
from scssc.errors import InputError
from scssc.metrics import align_labels, confusion_matrix

from conftest import subspace_columns


def agreement_after_alignment(a, b):
    counts, _, _ = confusion_matrix(a, b)
    perm = align_labels(counts)
    s = perm.size
    padded = np.zeros((s, s))
    padded[: counts.shape[0], : counts.shape[1]] = counts
    matched = sum(padded[perm[c], c] for c in range(s))
    return matched / counts.sum()


class TestFullSelfRepresentation:
    def test_diagonal_always_zero(self):
        rng = np.random.default_rng(0)
        data = rng.standard_normal((6, 15))
        data /= np.linalg.norm(data, axis=0)
        C = full_self_representation(data, 10.0)
        assert np.all(np.diag(C) == 0.0)

    def test_requires_unit_columns(self):
        with pytest.raises(InputError):
            full_self_representation(np.ones((3, 4)), 10.0)


class TestOracleClustering:
    def test_three_orthogonal_lines(self):
        rng = np.random.default_rng(1)
        signs = rng.choice([-1.0, 1.0], size=30)
        data = np.zeros((9, 30))
        for j in range(30):
            data[j // 10, j] = signs[j]
        labels = ssc_small_oracle(data, 10.0, 3, seed=0)
        truth = np.repeat([1, 2, 3], 10)
        assert agreement_after_alignment(labels, truth) == 1.0

    def test_duplicates_co_clustered(self):
        rng = np.random.default_rng(2)
        data, owners, _ = subspace_columns(rng, 8, 2, (12, 12))
        dup = np.hstack([data, data[:, :4]])
        labels = ssc_small_oracle(dup, 10.0, 2, seed=0)
        np.testing.assert_array_equal(labels[24:28], labels[:4])

    def test_cap_enforced(self):
        rng = np.random.default_rng(3)
        data = rng.standard_normal((4, 50))
        data /= np.linalg.norm(data, axis=0)
        with pytest.raises(InputError, match="cap"):
            ssc_small_oracle(data, 10.0, 2, max_n=40)
        # explicit override allows larger runs
        labels = ssc_small_oracle(data, 10.0, 2, max_n=50, seed=0)
        assert labels.shape == (50,)

    def test_two_subspace_accuracy(self):
        rng = np.random.default_rng(4)
        data, owners, _ = subspace_columns(rng, 12, 3, (30, 30), noise=0.01)
        labels = ssc_small_oracle(data, 10.0, 2, seed=0)
        assert agreement_after_alignment(labels, owners + 1) >= 0.95

    def test_timings_reported(self):
        rng = np.random.default_rng(5)
        data, _, _ = subspace_columns(rng, 8, 2, (10, 10))
        timings = {}
        ssc_small_oracle(data, 10.0, 2, seed=0, timings=timings)
        assert set(timings) == {"coding", "clustering", "total"}
        assert timings["total"] > 0
