import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depthmark import landmarks as lm
from depthmark.geometry import PointCloud, cover_radius

LINE = np.array([[0, 0], [1, 0], [2, 0], [10, 0]], float)
SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)


def random_cloud(seed, n=60, d=2):
    return np.random.default_rng(seed).normal(size=(n, d))


class TestMaxmin:
    def test_line(self):
        assert lm.maxmin(LINE, 2).indices.tolist() == [0, 3]

    def test_full_budget(self):
        assert sorted(lm.maxmin(LINE, 4).indices.tolist()) == [0, 1, 2, 3]

    def test_square(self):
        assert lm.maxmin(SQUARE, 3).indices.tolist() == [0, 2, 1]

    def test_budget_errors(self):
        with pytest.raises(ValueError, match="budget exceeds cloud"):
            lm.maxmin(LINE, 5)
        with pytest.raises(ValueError):
            lm.maxmin(LINE, 0)


class TestCells:
    def test_line(self):
        part = lm.assign_cells(LINE, [0, 3])
        assert [c.tolist() for c in part.cells] == [[0, 1, 2], [3]]

    def test_equidistant_goes_to_first_seed(self):
        part = lm.assign_cells([[0, 0], [1, 0], [2, 0]], [0, 2])
        assert part.assignment[1] == 0

    def test_seeds_own_cells_even_with_duplicates(self):
        P = np.array([[0, 0], [0, 0], [3, 0]], float)
        part = lm.assign_cells(P, [0, 1])
        assert part.assignment[0] == 0 and part.assignment[1] == 1
        assert np.all(part.sizes >= 1)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 15))
    def test_cell_ball(self, seed, m):
        X = random_cloud(seed)
        S = lm.maxmin(X, m)
        r = cover_radius(X, S.coords)
        part = lm.assign_cells(X, S)
        d = np.linalg.norm(X - X[part.seed_indices][part.assignment], axis=1)
        assert np.all(d <= r + 1e-9)


class TestRecentering:
    def test_collinear_cell_moves_to_median(self):
        P = np.array([[-1, 0], [0, 0], [1, 0]], float)
        part = lm.assign_cells(P, [0])
        assert lm.recenter_full(P, part).indices.tolist() == [1]

    def test_singleton_cells_stay(self):
        part = lm.assign_cells(LINE, [0, 1, 2, 3])
        assert lm.recenter_full(LINE, part).indices.tolist() == [0, 1, 2, 3]

    def test_moves_into_dense_core(self):
        rng = np.random.default_rng(0)
        core = rng.normal(scale=0.05, size=(6, 2))
        P = np.vstack([[[3.0, 3.0]], core])
        part = lm.assign_cells(P, [0])
        idx = lm.recenter_full(P, part).indices[0]
        assert idx != 0

    def test_fixed_step_projection(self):
        P = np.array([[0, 0], [1, 0], [2, 0]], float)
        part = lm.assign_cells(P, [0])
        L = lm.recenter_fixed_step(P, part, 0.6)
        assert L.indices.tolist() == [1]
        assert np.allclose(L.targets, [[0.6, 0]])

    def test_fixed_step_projection_tie(self):
        P = np.array([[0, 0], [1, 0], [2, 0]], float)
        part = lm.assign_cells(P, [0])
        assert lm.recenter_fixed_step(P, part, 0.5).indices.tolist() == [0]

    def test_alpha_edges(self):
        X = random_cloud(1)
        part = lm.assign_cells(X, lm.maxmin(X, 8))
        assert lm.recenter_fixed_step(X, part, 0.0).indices.tolist() == part.seed_indices.tolist()
        assert (lm.recenter_fixed_step(X, part, 1.0).indices.tolist()
                == lm.recenter_full(X, part).indices.tolist())
        with pytest.raises(ValueError):
            lm.recenter_fixed_step(X, part, 1.5)

    def test_support_alphas(self):
        part = lm.CellPartition(np.array([0] * 12 + [1] * 4), np.array([0, 12]))
        a = lm.support_alphas(part, 16, 0.6, 1.0)
        # n_bar = 8: the big cell saturates, the small one gets 0.6 * 4/8
        assert np.allclose(a, [0.6, 0.3])
        # n_i = 2 is a quarter of n_bar = 8
        part = lm.CellPartition(np.array([0] * 2 + [1] * 14), np.array([0, 2]))
        assert np.isclose(lm.support_alphas(part, 16, 0.6, 1.0)[0], 0.15)

    def test_support_errors(self):
        part = lm.assign_cells(LINE, [0, 3])
        for a, t in [(0.0, 1.0), (1.2, 1.0), (0.5, 0.0)]:
            with pytest.raises(ValueError):
                lm.recenter_support_weighted(LINE, part, a, t)

    def test_uniform_cells_match_fixed_step(self):
        P = np.array([[0, 0], [0.1, 0], [0.2, 0], [5, 0], [5.1, 0], [5.2, 0]])
        part = lm.assign_cells(P, [0, 3])
        sw = lm.recenter_support_weighted(P, part, 0.8, 0.5)
        fs = lm.recenter_fixed_step(P, part, 0.8)
        assert sw.indices.tolist() == fs.indices.tolist()

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 12), st.floats(0.05, 1.0), st.floats(0.25, 2.0))
    def test_cover_bounds_and_gating(self, seed, m, alpha_max, tau):
        X = random_cloud(seed, 50)
        S = lm.maxmin(X, m)
        r = cover_radius(X, S.coords)
        part = lm.assign_cells(X, S)
        L = lm.recenter_support_weighted(X, part, alpha_max, tau)
        assert cover_radius(X, L.coords) <= min(2.0, 1 + 2 * alpha_max) * r + 1e-9
        assert cover_radius(X, L.targets) <= (1 + alpha_max) * r + 1e-9
        alphas = lm.support_alphas(part, len(X), alpha_max, tau)
        moved = np.linalg.norm(L.targets - X[part.seed_indices], axis=1)
        assert np.all(moved <= alphas * r + 1e-9)
        assert np.all(part.assignment[L.indices] == np.arange(m))

    def test_three_d_uses_directional_depth(self):
        X = random_cloud(4, 80, 3)
        part = lm.assign_cells(X, lm.maxmin(X, 6))
        a = lm.recenter_full(X, part, rng_seed=7).indices
        b = lm.recenter_full(X, part, rng_seed=7).indices
        assert a.tolist() == b.tolist()
        assert np.all(part.assignment[a] == np.arange(6))


class TestBaselines:
    def test_random(self):
        assert sorted(lm.random_landmarks(LINE, 4, 0).indices.tolist()) == [0, 1, 2, 3]
        a = lm.random_landmarks(random_cloud(0), 10, 5).indices
        assert a.tolist() == lm.random_landmarks(random_cloud(0), 10, 5).indices.tolist()
        assert len(set(a.tolist())) == 10
        with pytest.raises(ValueError):
            lm.random_landmarks(LINE, 5, 0)

    def test_epsnet_line(self):
        L = lm.epsnet_matched(LINE, 2, order=[0, 1, 2, 3])
        assert L.indices.tolist() == [0, 3]
        assert 2 < L.params["eps"] <= 8

    def test_epsnet_full(self):
        assert sorted(lm.epsnet_matched(LINE, 4).indices.tolist()) == [0, 1, 2, 3]

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 20))
    def test_epsnet_separation(self, seed, m):
        X = random_cloud(seed, 40)
        L = lm.epsnet_matched(X, m, rng_seed=seed)
        assert len(L) == m
        eps = L.params["eps"]
        D = np.linalg.norm(L.coords[:, None] - L.coords[None], axis=2)
        assert np.all(D[np.triu_indices(m, 1)] > eps)

    def test_dense_core_full_keep_is_maxmin(self):
        X = random_cloud(3)
        assert (lm.dense_core_maxmin(X, 7, keep_fraction=1.0).indices.tolist()
                == lm.maxmin(X, 7).indices.tolist())

    def test_dense_core_drops_outliers(self):
        rng = np.random.default_rng(0)
        pts = np.vstack([rng.normal(scale=0.1, size=(27, 2)), [[9, 9], [-9, 9], [9, -9]]])
        X = PointCloud.from_points(pts, ["signal"] * 27 + ["outlier"] * 3)
        L = lm.dense_core_maxmin(X, 5, k=5, keep_fraction=0.9)
        assert lm.outlier_landmark_count(X, L) == 0
        assert lm.outlier_landmark_count(X, lm.maxmin(X, 5)) == 3

    def test_dense_core_survivors(self):
        X = random_cloud(2, 20)
        assert len(set(lm.dense_core_maxmin(X, 16, keep_fraction=0.8).indices.tolist())) == 16
        with pytest.raises(ValueError, match="dense core too small"):
            lm.dense_core_maxmin(X, 17, keep_fraction=0.8)

    def test_outlier_count(self):
        X = PointCloud.from_points(LINE, ["signal", "outlier", "signal", "outlier"])
        assert lm.outlier_landmark_count(X, [1, 3]) == 2
        assert lm.outlier_landmark_count(PointCloud.from_points(LINE), [0, 1, 2]) == 0

    def test_select_dispatch(self):
        X = random_cloud(0)
        for method in lm.METHODS:
            assert len(lm.select(X, method, 5)) == 5
        with pytest.raises(ValueError):
            lm.select(X, "nope", 5)
