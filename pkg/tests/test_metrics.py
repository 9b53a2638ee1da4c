import itertools

import numpy as np
import pytest

from scssc.core import GroundTruth
from scssc.errors import InputError
from scssc.metrics import (align_labels, aligned_confusion, confusion_matrix,
                           evaluate, kappa, nmi)


def bruteforce_best_trace(matrix):
    s = max(matrix.shape)
    padded = np.zeros((s, s))
    padded[: matrix.shape[0], : matrix.shape[1]] = matrix
    best = -1.0
    for perm in itertools.permutations(range(s)):
        best = max(best, sum(padded[perm[c], c] for c in range(s)))
    return best


class TestConfusion:
    def test_perfect_diagonal(self):
        gt = GroundTruth(np.array([1, 1, 2, 2, 3, 3]), 3)
        counts, gcls, pcls = confusion_matrix(np.array([1, 1, 2, 2, 3, 3]), gt)
        np.testing.assert_array_equal(counts, 2 * np.eye(3, dtype=int))

    def test_all_ignored_raises(self):
        gt = GroundTruth(np.zeros(4, dtype=np.int64), 0)
        with pytest.raises(InputError, match="unlabeled"):
            confusion_matrix(np.ones(4, dtype=np.int64), gt)

    def test_hand_counted_case(self):
        gt = GroundTruth(np.array([1, 1, 1, 1, 2, 2, 2, 2]), 2)
        pred = np.array([1, 1, 1, 2, 2, 2, 2, 1])
        counts, _, _ = confusion_matrix(pred, gt)
        np.testing.assert_array_equal(counts, [[3, 1], [1, 3]])

    def test_ignore_label_excluded(self):
        gt = GroundTruth(np.array([0, 1, 0, 2]), 2)
        counts, gcls, _ = confusion_matrix(np.array([5, 1, 5, 2]), gt)
        assert counts.sum() == 2
        np.testing.assert_array_equal(gcls, [1, 2])


class TestAlign:
    def test_swapped_labels_restored(self):
        gt = GroundTruth(np.array([1, 1, 2, 2]), 2)
        pred = np.array([2, 2, 1, 1])
        report = evaluate(pred, gt)
        assert report.oa == 100.0

    def test_identity_on_diagonal(self):
        perm = align_labels(np.diag([5, 3, 2]))
        np.testing.assert_array_equal(perm, [0, 1, 2])

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_exhaustive_permutations(self, seed):
        rng = np.random.default_rng(seed)
        counts = rng.integers(0, 20, size=(4, 4))
        perm = align_labels(counts)
        aligned = aligned_confusion(counts, perm)
        assert np.trace(aligned) == bruteforce_best_trace(counts)

    def test_rectangular_padding(self):
        counts = np.array([[4, 0, 1], [0, 3, 2]])  # 2 truth, 3 predicted
        perm = align_labels(counts)
        aligned = aligned_confusion(counts, perm)
        assert np.trace(aligned) == bruteforce_best_trace(counts)

    def test_lexicographic_ties(self):
        # all assignments give trace 0: the lexicographically first must win
        perm = align_labels(np.zeros((3, 3)))
        np.testing.assert_array_equal(perm, [0, 1, 2])


class TestKappa:
    def test_perfect(self):
        assert kappa(np.diag([4, 4])) == 1.0

    def test_hand_value(self):
        assert kappa(np.array([[3, 1], [1, 3]])) == pytest.approx(0.5, abs=1e-12)

    def test_uniform_is_zero(self):
        assert kappa(np.full((3, 3), 7)) == pytest.approx(0.0, abs=1e-12)

    def test_single_class_edge(self):
        assert kappa(np.array([[5]])) == 1.0
        assert kappa(np.array([[0, 5], [0, 0]])) == 0.0


class TestNmi:
    def test_identical_partitions(self):
        a = np.array([1, 1, 2, 2, 3])
        assert nmi(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_independent_four_points(self):
        assert nmi(np.array([1, 1, 2, 2]), np.array([1, 2, 1, 2])) == \
            pytest.approx(0.0, abs=1e-12)

    def test_single_cluster_both(self):
        assert nmi(np.ones(5, dtype=int), np.ones(5, dtype=int)) == 1.0

    def test_one_side_constant(self):
        assert nmi(np.ones(6, dtype=int), np.array([1, 1, 1, 2, 2, 2])) == 0.0

    def test_independent_large_near_zero(self):
        rng = np.random.default_rng(0)
        a = rng.integers(1, 5, size=20000)
        b = rng.integers(1, 5, size=20000)
        assert nmi(a, b) < 0.05

    def test_invariant_under_relabeling(self):
        rng = np.random.default_rng(1)
        gt = rng.integers(1, 4, size=300)
        pred = rng.integers(1, 4, size=300)
        base = nmi(pred, gt)
        remap = np.array([0, 3, 1, 2])  # permutation of {1,2,3}
        assert nmi(remap[pred], gt) == pytest.approx(base, abs=1e-12)


class TestEvaluate:
    def test_report_fields_consistent(self):
        rng = np.random.default_rng(2)
        gt = GroundTruth(rng.integers(0, 4, size=500), 3)
        pred = rng.integers(1, 4, size=500)
        report = evaluate(pred, gt)
        assert report.oa == pytest.approx(
            100.0 * np.trace(report.confusion) / report.n_evaluated)
        assert report.aa == pytest.approx(report.ua.mean())
        assert 0.0 <= report.nmi <= 1.0
        assert report.kappa <= 1.0
        assert report.n_evaluated == int((gt.labels != 0).sum())

    def test_metrics_invariant_under_prediction_relabeling(self):
        rng = np.random.default_rng(3)
        gt = GroundTruth(rng.integers(0, 4, size=400), 3)
        pred = rng.integers(1, 5, size=400)
        base = evaluate(pred, gt)
        remap = np.array([0, 4, 2, 3, 1])  # permutation of {1..4}
        moved = evaluate(remap[pred], gt)
        assert moved.oa == pytest.approx(base.oa, abs=1e-12)
        assert moved.aa == pytest.approx(base.aa, abs=1e-12)
        assert moved.kappa == pytest.approx(base.kappa, abs=1e-12)
        assert moved.nmi == pytest.approx(base.nmi, abs=1e-12)

    def test_table_and_json(self, tmp_path):
        gt = GroundTruth(np.array([1, 1, 2, 2]), 2)
        report = evaluate(np.array([1, 1, 2, 1]), gt)
        text = report.format_table()
        assert "OA" in text and "Kappa" in text
        path = str(tmp_path / "report.json")
        report.to_json(path)
        import json

        data = json.load(open(path))
        assert data["oa"] == pytest.approx(75.0)
