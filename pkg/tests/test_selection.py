import numpy as np
import pytest

from scssc.core import PixelMatrix
from scssc.errors import InputError
from scssc.lasso import self_rep_cost
from scssc.selection import (ExemplarDictionary, build_dictionary,
                             exemplar_count, medoid, save_exemplars_csv,
                             select_exemplars)
from scssc.superpixels import SegmentationMap

from conftest import as_pixel_matrix, subspace_columns, unit_columns


class TestMedoid:
    def test_single_pixel(self):
        m = as_pixel_matrix(np.array([[1.0, 2.0]]))
        assert medoid(m, np.array([1])) == 1

    def test_collinear_midpoint(self):
        data = np.array([[0.0, 1.0, 2.0], [0.0, 0.0, 0.0]])
        assert medoid(as_pixel_matrix(data), np.arange(3)) == 1

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(0)
        data = rng.standard_normal((6, 20))
        m = as_pixel_matrix(data)
        # brute force: minimize total squared distance to all members
        totals = [
            sum(np.sum((data[:, j] - data[:, i]) ** 2) for i in range(20))
            for j in range(20)
        ]
        assert medoid(m, np.arange(20)) == int(np.argmin(totals))

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            medoid(as_pixel_matrix(np.ones((2, 3))), np.array([], dtype=int))


class TestSelectExemplars:
    def test_singleton_segment(self):
        m = as_pixel_matrix(unit_columns(np.random.default_rng(1), 4, 6))
        picked = select_exemplars(m, np.array([3]), 0.2, 10.0)
        np.testing.assert_array_equal(picked, [3])

    def test_two_pixel_segment_clamps_to_one(self):
        # floor(rho * 2) <= 1 for every rho in (0, 1)
        data = np.eye(4)[:, :2]
        m = as_pixel_matrix(data)
        picked = select_exemplars(m, np.array([0, 1]), 0.99, 10.0)
        assert picked.size == 1

    def test_orthogonal_direction_picked_second(self):
        # segment {a, a, b} with b orthogonal to a: medoid is the duplicated
        # direction, and the max-cost second pick is the orthogonal pixel
        a = np.zeros(4)
        a[0] = 1.0
        b = np.zeros(4)
        b[1] = 1.0
        data = np.stack([a, a, b], axis=1)
        m = as_pixel_matrix(data)
        picked = select_exemplars(m, np.arange(3), 0.7, 10.0)
        assert picked.size == 2
        assert picked[0] in (0, 1)
        assert picked[1] == 2

    @pytest.mark.parametrize("seed", range(6))
    def test_lazy_equals_naive(self, seed):
        rng = np.random.default_rng(seed)
        ne = int(rng.integers(5, 45))
        data = unit_columns(rng, int(rng.integers(3, 12)), ne)
        m = as_pixel_matrix(data)
        idx = np.arange(ne)
        rho = float(rng.uniform(0.1, 0.6))
        lazy = select_exemplars(m, idx, rho, 10.0, lazy=True)
        naive = select_exemplars(m, idx, rho, 10.0, lazy=False)
        np.testing.assert_array_equal(lazy, naive)

    def test_lazy_equals_naive_with_duplicates(self):
        rng = np.random.default_rng(99)
        base = unit_columns(rng, 5, 6)
        data = np.hstack([base, base[:, :3], base[:, :1]])  # exact repeats
        m = as_pixel_matrix(data)
        idx = np.arange(data.shape[1])
        lazy = select_exemplars(m, idx, 0.5, 10.0, lazy=True)
        naive = select_exemplars(m, idx, 0.5, 10.0, lazy=False)
        np.testing.assert_array_equal(lazy, naive)

    def test_constant_segment(self):
        data = np.tile(np.array([[0.6], [0.8]]), (1, 8))
        m = as_pixel_matrix(data)
        lazy = select_exemplars(m, np.arange(8), 0.5, 10.0, lazy=True)
        naive = select_exemplars(m, np.arange(8), 0.5, 10.0, lazy=False)
        np.testing.assert_array_equal(lazy, naive)
        assert lazy.size == 4

    def test_max_cost_monotone_over_rounds(self):
        rng = np.random.default_rng(10)
        ne = 24
        data = unit_columns(rng, 8, ne)
        m = as_pixel_matrix(data)
        picked = select_exemplars(m, np.arange(ne), 0.4, 10.0)
        worst = []
        for rounds in range(1, picked.size + 1):
            chosen = data[:, picked[:rounds]]
            worst.append(max(self_rep_cost(data[:, j], chosen, 10.0)
                             for j in range(ne)))
        for a, b in zip(worst, worst[1:]):
            assert b <= a + 1e-9

    def test_stale_bounds_valid(self):
        # recomputed costs never exceed the cost against a smaller dictionary
        rng = np.random.default_rng(11)
        data = unit_columns(rng, 6, 18)
        m = as_pixel_matrix(data)
        picked = select_exemplars(m, np.arange(18), 0.5, 10.0)
        for j in range(18):
            prev = np.inf
            for rounds in range(1, picked.size + 1):
                cost = self_rep_cost(data[:, j], data[:, picked[:rounds]], 10.0)
                assert cost <= prev + 1e-9
                prev = cost

    def test_rejects_bad_params(self):
        m = as_pixel_matrix(unit_columns(np.random.default_rng(2), 3, 5))
        with pytest.raises(InputError):
            select_exemplars(m, np.arange(5), 0.0, 10.0)
        with pytest.raises(InputError):
            select_exemplars(m, np.arange(5), 1.0, 10.0)
        with pytest.raises(InputError):
            select_exemplars(m, np.arange(5), 0.5, 1.0)


def strip_segmentation(sizes):
    """1 x N strip image split into consecutive runs of the given sizes."""
    assignments = np.repeat(np.arange(1, len(sizes) + 1), sizes)
    return SegmentationMap(assignments, len(sizes),
                           np.asarray(sizes, dtype=np.int64),
                           (1, int(np.sum(sizes))))


class TestBuildDictionary:
    def test_all_singletons(self):
        rng = np.random.default_rng(3)
        data = unit_columns(rng, 4, 6)
        m = as_pixel_matrix(data)
        segmap = strip_segmentation([1] * 6)
        d = build_dictionary(m, segmap, 0.5, 10.0)
        np.testing.assert_array_equal(np.sort(d.indices), np.arange(6))
        assert d.size == 6

    def test_counting_uniform_segments(self):
        rng = np.random.default_rng(4)
        data = unit_columns(rng, 5, 24)
        m = as_pixel_matrix(data)
        segmap = strip_segmentation([6, 6, 6, 6])
        d = build_dictionary(m, segmap, 0.5, 10.0)
        assert d.size == 4 * max(1, int(np.floor(0.5 * 6)))
        np.testing.assert_array_equal(d.per_segment, [3, 3, 3, 3])
        # grouped ascending by segment
        np.testing.assert_array_equal(d.segment_ids, np.repeat([1, 2, 3, 4], 3))

    def test_every_subspace_contributes(self):
        rng = np.random.default_rng(5)
        data, owners, _ = subspace_columns(rng, 10, 2, (12, 12))
        m = as_pixel_matrix(data)
        segmap = strip_segmentation([12, 12])  # segments align with subspaces
        d = build_dictionary(m, segmap, 0.25, 10.0)
        atom_owner = owners[d.indices]
        assert set(atom_owner.tolist()) == {0, 1}

    def test_indices_belong_to_segments(self):
        rng = np.random.default_rng(6)
        data = unit_columns(rng, 4, 30)
        m = as_pixel_matrix(data)
        segmap = strip_segmentation([10, 14, 6])
        d = build_dictionary(m, segmap, 0.3, 10.0)
        pos = 0
        for e, count in enumerate(d.per_segment, start=1):
            seg_members = set(np.flatnonzero(segmap.assignments == e).tolist())
            chunk = d.indices[pos:pos + count]
            assert set(chunk.tolist()) <= seg_members
            assert len(set(chunk.tolist())) == count  # distinct
            pos += count

    def test_exemplar_csv(self, tmp_path):
        rng = np.random.default_rng(7)
        data = unit_columns(rng, 4, 8)
        m = as_pixel_matrix(data)
        d = build_dictionary(m, strip_segmentation([4, 4]), 0.5, 10.0)
        path = str(tmp_path / "ex.csv")
        save_exemplars_csv(d, path)
        lines = open(path).read().strip().splitlines()
        assert lines[0] == "segment,pixel,round"
        assert len(lines) == 1 + d.size


class TestExemplarCount:
    def test_clamped_at_one(self):
        assert exemplar_count(0.2, 1) == 1
        assert exemplar_count(0.2, 4) == 1
        assert exemplar_count(0.35, 3) == 1
        assert exemplar_count(0.5, 7) == 3
