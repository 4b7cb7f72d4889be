"""Landmark selection: maxmin seeds, depth-based recentering, and baselines."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .geometry import PointCloud, cell_depths_2d, directional_depth_approx, _as_points

METHODS = (
    "maxmin",
    "random",
    "full_recenter",
    "fixed_step",
    "support_weighted",
    "epsnet_matched",
    "dense_core",
)


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    indices: np.ndarray
    coords: np.ndarray
    method: str
    params: dict = field(default_factory=dict)
    # unprojected move targets for the partial-recentering rules
    targets: np.ndarray | None = None

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class CellPartition:
    assignment: np.ndarray
    seed_indices: np.ndarray

    @property
    def cells(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.assignment == i) for i in range(len(self.seed_indices))]

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=len(self.seed_indices))


def _landmarks(X, idx, method, params=None, targets=None) -> LandmarkSet:
    idx = np.asarray(idx, dtype=int)
    return LandmarkSet(idx, _as_points(X)[idx].copy(), method, dict(params or {}), targets)


def _check_budget(n: int, m: int):
    if m < 1:
        raise ValueError("budget must be positive")
    if m > n:
        raise ValueError("budget exceeds cloud")


def maxmin_indices(pts: np.ndarray, m: int, first: int = 0) -> np.ndarray:
    n = len(pts)
    _check_budget(n, m)
    if not 0 <= first < n:
        raise IndexError("first seed out of range")
    chosen = [first]
    dist = np.linalg.norm(pts - pts[first], axis=1)
    for _ in range(m - 1):
        nxt = int(np.argmax(dist))  # first maximum = lowest index
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(pts - pts[nxt], axis=1))
    return np.array(chosen, dtype=int)


def maxmin(X, m: int, first: int = 0) -> LandmarkSet:
    """Greedy farthest-point landmarks starting from cloud index ``first``."""
    return _landmarks(X, maxmin_indices(_as_points(X), m, first), "maxmin", {"first": first})


def assign_cells(X, S) -> CellPartition:
    """Nearest-seed partition; ties go to the seed listed first.

    Every seed is forced into its own cell so that duplicate cloud points
    cannot leave a cell empty.
    """
    pts = _as_points(X)
    seeds = np.asarray(S.indices if isinstance(S, LandmarkSet) else S, dtype=int)
    if seeds.size == 0:
        raise ValueError("empty seed set")
    assignment = np.argmin(cdist(pts, pts[seeds]), axis=1)
    assignment[seeds] = np.arange(len(seeds))
    return CellPartition(assignment, seeds)


def deepest_in_cells(X, part: CellPartition, rng_seed: int = 0, n_dirs: int = 64) -> np.ndarray:
    """Deepest data point of each cell (exact in 2D, directional in 3D)."""
    pts = _as_points(X)
    out = np.empty(len(part.seed_indices), dtype=int)
    for i, cell in enumerate(part.cells):
        sub = pts[cell]
        if pts.shape[1] == 2:
            depths = cell_depths_2d(sub)
        else:
            depths = np.array(
                [directional_depth_approx(sub, p, n_dirs, rng_seed) for p in sub]
            )
        out[i] = cell[int(np.argmax(depths))]
    return out


def _project_to_cells(pts, part, targets) -> np.ndarray:
    out = np.empty(len(targets), dtype=int)
    for i, cell in enumerate(part.cells):
        d = np.linalg.norm(pts[cell] - targets[i], axis=1)
        out[i] = cell[int(np.argmin(d))]
    return out


def _partial(X, part, alphas, deepest, method, params) -> LandmarkSet:
    pts = _as_points(X)
    s = pts[part.seed_indices]
    a = pts[deepest]
    alphas = np.asarray(alphas, dtype=float)[:, None]
    z = (1.0 - alphas) * s + alphas * a
    idx = _project_to_cells(pts, part, z)
    return _landmarks(X, idx, method, params, targets=z)


def recenter_full(X, part: CellPartition, rng_seed: int = 0, deepest=None) -> LandmarkSet:
    """Replace each seed by the deepest point of its cell."""
    if deepest is None:
        deepest = deepest_in_cells(X, part, rng_seed)
    lm = _landmarks(X, deepest, "full_recenter")
    return LandmarkSet(lm.indices, lm.coords, lm.method, {}, lm.coords.copy())


def recenter_fixed_step(X, part: CellPartition, alpha: float, rng_seed: int = 0,
                        deepest=None) -> LandmarkSet:
    """Move every seed a fraction ``alpha`` toward its cell's deepest point,
    then snap to the nearest point of the same cell."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if deepest is None:
        deepest = deepest_in_cells(X, part, rng_seed)
    alphas = np.full(len(part.seed_indices), float(alpha))
    return _partial(X, part, alphas, deepest, "fixed_step", {"alpha": alpha})


def support_alphas(part: CellPartition, n_points: int, alpha_max: float, tau: float) -> np.ndarray:
    """Per-cell step alpha_max * min(1, n_i / (tau * n_bar)) with n_bar = n/m."""
    if not 0.0 < alpha_max <= 1.0:
        raise ValueError("alpha_max must lie in (0, 1]")
    if tau <= 0:
        raise ValueError("tau must be positive")
    m = len(part.seed_indices)
    n_bar = n_points / m
    return alpha_max * np.minimum(1.0, part.sizes / (tau * n_bar))


def recenter_support_weighted(X, part: CellPartition, alpha_max: float, tau: float,
                              rng_seed: int = 0, deepest=None) -> LandmarkSet:
    alphas = support_alphas(part, len(_as_points(X)), alpha_max, tau)
    if deepest is None:
        deepest = deepest_in_cells(X, part, rng_seed)
    return _partial(X, part, alphas, deepest, "support_weighted",
                    {"alpha_max": alpha_max, "tau": tau})


def random_landmarks(X, m: int, rng_seed: int) -> LandmarkSet:
    n = len(_as_points(X))
    _check_budget(n, m)
    rng = np.random.default_rng(rng_seed)
    return _landmarks(X, rng.choice(n, size=m, replace=False), "random")


def greedy_net(pts: np.ndarray, eps: float, order) -> list[int]:
    """Scan ``order`` and admit points farther than ``eps`` from all admitted."""
    admitted: list[int] = []
    mind = np.full(len(pts), np.inf)
    for i in order:
        if mind[i] > eps:
            admitted.append(int(i))
            mind = np.minimum(mind, np.linalg.norm(pts - pts[i], axis=1))
    return admitted


def epsnet_matched(X, m: int, rng_seed: int = 0, order=None, iterations: int = 40) -> LandmarkSet:
    """Budget-matched greedy epsilon-net.

    Bisects ``eps`` on [0, diameter] until the greedy net has exactly ``m``
    points; otherwise keeps the first ``m`` points of the net at the smallest
    tried ``eps`` whose net has at least ``m`` points.
    """
    pts = _as_points(X)
    n = len(pts)
    _check_budget(n, m)
    if order is None:
        order = np.random.default_rng(rng_seed).permutation(n)
    order = np.asarray(order, dtype=int)
    lo = 0.0
    hi = float(pdist(pts).max()) if n > 1 else 0.0
    net_lo = greedy_net(pts, lo, order)
    result, eps = None, lo
    if len(net_lo) == m:
        result = net_lo
    else:
        net_hi = greedy_net(pts, hi, order)
        if len(net_hi) == m:
            result, eps = net_hi, hi
    for _ in range(iterations if result is None else 0):
        mid = 0.5 * (lo + hi)
        net = greedy_net(pts, mid, order)
        if len(net) == m:
            result, eps = net, mid
            break
        if len(net) > m:
            lo, net_lo = mid, net
        else:
            hi = mid
    if result is None:
        result, eps = net_lo[:m], lo
    return _landmarks(X, result, "epsnet_matched", {"eps": eps})


def knn_radius(pts: np.ndarray, k: int) -> np.ndarray:
    """Distance from each point to its k-th nearest other point."""
    n = len(pts)
    kk = min(k, n - 1)
    if kk < 1:
        return np.zeros(n)
    D = cdist(pts, pts)
    return np.sort(D, axis=1)[:, kk]


def dense_core_maxmin(X, m: int, k: int = 10, keep_fraction: float = 0.8) -> LandmarkSet:
    """Maxmin on the ``keep_fraction`` of points with the smallest k-NN radius."""
    if k < 1:
        raise ValueError("k must be positive")
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError("keep_fraction must lie in (0, 1]")
    pts = _as_points(X)
    n = len(pts)
    n_keep = int(round(keep_fraction * n))
    if n_keep >= n:
        kept = np.arange(n)
    else:
        rad = knn_radius(pts, k)
        kept = np.sort(np.argsort(rad, kind="stable")[:n_keep])
    if len(kept) < m:
        raise ValueError("dense core too small")
    sub = maxmin_indices(pts[kept], m, 0)
    return _landmarks(X, kept[sub], "dense_core", {"k": k, "keep_fraction": keep_fraction})


def outlier_landmark_count(X: PointCloud, L) -> int:
    idx = L.indices if isinstance(L, LandmarkSet) else np.asarray(L, dtype=int)
    return int(sum(X.labels[i] != "signal" for i in idx))


def select(X, method: str, m: int, *, rng_seed: int = 0, alpha: float = 0.5,
           alpha_max: float = 0.6, tau: float = 1.0, dense_k: int = 10,
           keep_fraction: float = 0.8) -> LandmarkSet:
    """Dispatch by method tag; recentering variants start from maxmin seeds."""
    if method == "maxmin":
        return maxmin(X, m)
    if method == "random":
        return random_landmarks(X, m, rng_seed)
    if method == "epsnet_matched":
        return epsnet_matched(X, m, rng_seed)
    if method == "dense_core":
        return dense_core_maxmin(X, m, dense_k, keep_fraction)
    seeds = maxmin(X, m)
    part = assign_cells(X, seeds)
    if method == "full_recenter":
        return recenter_full(X, part, rng_seed)
    if method == "fixed_step":
        return recenter_fixed_step(X, part, alpha, rng_seed)
    if method == "support_weighted":
        return recenter_support_weighted(X, part, alpha_max, tau, rng_seed)
    raise ValueError(f"unknown method {method!r}")
