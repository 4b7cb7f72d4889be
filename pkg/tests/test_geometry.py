import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depthmark.geometry import (
    PointCloud, cell_depths_2d, cover_radius, deepest_point, directional_depth_approx,
    halfspace_depth_2d, halfspace_depth_2d_oracle, halfspace_depth_exact, mean_signal_cover,
)

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
LINE = np.array([[0, 0], [1, 0], [2, 0], [10, 0]], float)
CUBE = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], float)

coord = st.integers(-4, 4)
planar = st.lists(st.tuples(coord, coord), min_size=1, max_size=12)


class TestPointCloud:
    def test_default_labels_are_signal(self):
        X = PointCloud.from_points(SQUARE)
        assert X.dim == 2 and len(X) == 4 and X.signal_mask.all()

    @pytest.mark.parametrize("pts", [np.zeros((0, 2)), np.zeros((3, 4)), [[0, np.nan]]])
    def test_rejects_bad_points(self, pts):
        with pytest.raises(ValueError):
            PointCloud.from_points(pts)

    def test_label_length_checked(self):
        with pytest.raises(ValueError):
            PointCloud.from_points(SQUARE, ["signal"])


class TestPlanarDepth:
    def test_square_center(self):
        assert halfspace_depth_2d(SQUARE, (0.5, 0.5)) == 2

    def test_square_corner(self):
        assert halfspace_depth_2d(SQUARE, (0, 0)) == 1

    def test_collinear_median(self):
        assert halfspace_depth_2d([[-1, 0], [0, 0], [1, 0]], (0, 0)) == 2

    def test_far_query_has_zero_depth(self):
        assert halfspace_depth_2d(SQUARE, (5, 5)) == 0

    def test_duplicates_count(self):
        P = [[0, 0], [0, 0], [0, 0], [1, 0]]
        assert halfspace_depth_2d(P, (0, 0)) == 3

    def test_errors(self):
        with pytest.raises(ValueError, match="empty point set"):
            halfspace_depth_2d(np.zeros((0, 2)), (0, 0))
        with pytest.raises(ValueError, match="dimension mismatch"):
            halfspace_depth_2d(CUBE, (0, 0, 0))

    @settings(max_examples=150, deadline=None)
    @given(planar, st.tuples(coord, coord))
    def test_matches_oracle_on_grids(self, pts, y):
        P = np.array(pts, float)
        assert halfspace_depth_2d(P, y) == halfspace_depth_2d_oracle(P, y)

    @settings(max_examples=60, deadline=None)
    @given(planar)
    def test_member_depth_bounds(self, pts):
        P = np.array(pts, float)
        d = cell_depths_2d(P)
        assert np.all(d >= 1) and np.all(d <= len(P))
        assert d.tolist() == [halfspace_depth_2d(P, p) for p in P]

    def test_agrees_with_general_exact_depth(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            P = rng.normal(size=(9, 2))
            y = rng.normal(size=2)
            assert halfspace_depth_2d(P, y) == halfspace_depth_exact(P, y)


class TestDeepestPoint:
    def test_collinear(self):
        assert deepest_point([[-1, 0], [0, 0], [1, 0]]) == 1

    def test_singleton(self):
        assert deepest_point(LINE, [2]) == 2

    def test_square_tie_goes_to_lowest_index(self):
        P = np.concatenate([LINE, SQUARE + 20])
        assert deepest_point(P, [7, 5, 4, 6]) == 4

    def test_empty_cell(self):
        with pytest.raises(ValueError):
            deepest_point(SQUARE, [])


class TestDirectionalDepth:
    def test_single_point(self):
        assert directional_depth_approx([[1.0, 2.0, 3.0]], (1.0, 2.0, 3.0), n_dirs=5) == 1

    def test_cube_centroid(self):
        v = directional_depth_approx(CUBE, (0.5, 0.5, 0.5), 64, rng_seed=0)
        assert halfspace_depth_exact(CUBE, (0.5, 0.5, 0.5)) == 4
        assert 4 <= v <= 8

    def test_cube_corner(self):
        assert directional_depth_approx(CUBE, (0, 0, 0), 64, rng_seed=0) >= 1

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        P = rng.normal(size=(30, 3))
        a = [directional_depth_approx(P, p, 16, rng_seed=3) for p in P]
        b = [directional_depth_approx(P, p, 16, rng_seed=3) for p in P]
        assert a == b

    def test_zero_directions(self):
        with pytest.raises(ValueError):
            directional_depth_approx(CUBE, (0, 0, 0), n_dirs=0)

    def test_upper_bounds_exact_depth(self):
        rng = np.random.default_rng(2)
        for _ in range(40):
            P = rng.normal(size=(int(rng.integers(4, 11)), 3))
            y = P[int(rng.integers(len(P)))] if rng.random() < 0.5 else rng.normal(size=3)
            assert directional_depth_approx(P, y, 32, rng_seed=4) >= halfspace_depth_exact(P, y)


class TestCover:
    def test_line(self):
        assert cover_radius(LINE, [[0, 0], [10, 0]]) == 2.0

    def test_identity(self):
        assert cover_radius(LINE, LINE) == 0.0

    def test_square_center(self):
        assert math.isclose(cover_radius(SQUARE, [[0.5, 0.5]]), math.sqrt(0.5))

    def test_empty_landmarks(self):
        with pytest.raises(ValueError):
            cover_radius(LINE, np.zeros((0, 2)))

    @settings(max_examples=50, deadline=None)
    @given(planar, st.tuples(coord, coord))
    def test_monotone_in_landmarks(self, pts, extra):
        X = np.array(pts, float)
        L = X[:1]
        assert cover_radius(X, np.vstack([L, [extra]])) <= cover_radius(X, L)

    def test_mean_signal_cover(self):
        X = PointCloud.from_points([[0, 0], [2, 0]])
        assert mean_signal_cover(X, [[0, 0]]) == 1.0
        noisy = PointCloud.from_points([[0, 0], [2, 0], [50, 50]], ["signal", "signal", "outlier"])
        assert mean_signal_cover(noisy, [[0, 0]]) == 1.0
        assert mean_signal_cover(noisy, noisy.points) == 0.0

    def test_no_signal(self):
        X = PointCloud.from_points([[0, 0]], ["outlier"])
        with pytest.raises(ValueError, match="no signal points"):
            mean_signal_cover(X, [[0, 0]])
