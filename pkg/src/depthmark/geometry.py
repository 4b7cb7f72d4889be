"""Metric primitives and halfspace (Tukey) depth.

Planar depth is exact: orientation signs are evaluated with a floating-point
filter and fall back to rational arithmetic whenever the filter cannot
certify the sign, so collinear and coincident configurations are counted
exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

SIGNAL = "signal"
OUTLIER = "outlier"

_EPS = np.finfo(float).eps / 2.0
_CCW_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Labeled finite point set; labels are ``"signal"`` or ``"outlier"``."""

    points: np.ndarray
    labels: tuple

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("point cloud must be a nonempty (n, d) array")
        if pts.shape[1] not in (2, 3):
            raise ValueError(f"unsupported dimension {pts.shape[1]}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("coordinates must be finite")
        labels = tuple(self.labels)
        if len(labels) != pts.shape[0]:
            raise ValueError("labels and points differ in length")
        bad = set(labels) - {SIGNAL, OUTLIER}
        if bad:
            raise ValueError(f"unknown labels {sorted(bad)}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_points(cls, points, labels=None) -> "PointCloud":
        pts = np.asarray(points, dtype=float)
        if labels is None:
            labels = (SIGNAL,) * len(pts)
        return cls(pts, tuple(labels))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def signal_mask(self) -> np.ndarray:
        return np.array([lab == SIGNAL for lab in self.labels], dtype=bool)

    @property
    def outlier_mask(self) -> np.ndarray:
        return ~self.signal_mask

    def subset(self, idx) -> "PointCloud":
        idx = np.asarray(idx, dtype=int)
        return PointCloud(self.points[idx], tuple(self.labels[i] for i in idx))


def _as_points(P) -> np.ndarray:
    if isinstance(P, PointCloud):
        return P.points
    return np.asarray(P, dtype=float)


# ---------------------------------------------------------------------------
# exact planar predicates


def _orient_exact(ax, ay, bx, by, cx, cy) -> int:
    """Sign of (a - c) x (b - c) computed in rational arithmetic."""
    ax, ay, bx, by, cx, cy = map(Fraction, (ax, ay, bx, by, cx, cy))
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (det > 0) - (det < 0)


def orientation_signs(y, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Exact sign of (A - y) x (B - y), broadcast over A and B.

    ``A`` and ``B`` are (..., 2) arrays that broadcast against each other.
    """
    y = np.asarray(y, dtype=float)
    A, B = np.broadcast_arrays(np.asarray(A, float), np.asarray(B, float))
    l = (A[..., 0] - y[0]) * (B[..., 1] - y[1])
    r = (A[..., 1] - y[1]) * (B[..., 0] - y[0])
    det = l - r
    bound = _CCW_ERRBOUND * (np.abs(l) + np.abs(r))
    sign = np.sign(det).astype(np.int8)
    unsure = np.abs(det) <= bound
    # exact zeros from identical coordinates need no rational fallback
    same = (
        np.all(A == y, axis=-1) | np.all(B == y, axis=-1) | np.all(A == B, axis=-1)
    )
    sign[same] = 0
    unsure &= ~same
    if unsure.any():
        for pos in zip(*np.nonzero(unsure)):
            a, b = A[pos], B[pos]
            sign[pos] = _orient_exact(a[0], a[1], b[0], b[1], y[0], y[1])
    return sign


def _direction_codes(D: np.ndarray) -> np.ndarray:
    """Per-row sign pattern used to compare directions of collinear vectors.

    Two nonzero collinear vectors point the same way iff the signs of their
    first nonzero component agree, and the component index is shared.
    """
    sx = np.sign(D[:, 0]).astype(np.int8)
    sy = np.sign(D[:, 1]).astype(np.int8)
    return np.where(sx != 0, sx, sy)


def _depth_from_signs(orient: np.ndarray, zero: np.ndarray, codes: np.ndarray) -> int:
    """Depth from an orientation matrix ``orient[i, j] = sign(d_i x d_j)``."""
    nz = ~zero
    n_zero = int(zero.sum())
    if not nz.any():
        return n_zero
    O = orient[np.ix_(nz, nz)]
    c = codes[nz]
    left = (O > 0).sum(axis=1)
    right = (O < 0).sum(axis=1)
    col = O == 0
    same = col & (c[:, None] == c[None, :])
    ray_fwd = same.sum(axis=1)
    ray_back = (col & ~same).sum(axis=1)
    best = np.minimum(left, right) + np.minimum(ray_fwd, ray_back)
    return n_zero + int(best.min())


def _check_planar(P) -> np.ndarray:
    pts = _as_points(P)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("empty point set")
    if pts.shape[1] != 2:
        raise ValueError("dimension mismatch")
    return pts


def halfspace_depth_2d(P, y) -> int:
    """Exact halfspace depth of ``y`` with respect to the planar set ``P``.

    Enumerates the directed lines through ``y`` and each point of ``P``: the
    open side count plus the smaller of the two collinear rays gives the
    count of a halfplane rotated infinitesimally off that line.
    """
    pts = _check_planar(P)
    y = np.asarray(y, dtype=float)
    if y.shape != (2,):
        raise ValueError("dimension mismatch")
    D = pts - y
    zero = np.all(pts == y, axis=1)
    orient = orientation_signs(y, pts[:, None, :], pts[None, :, :])
    return _depth_from_signs(orient, zero, _direction_codes(D))


def cell_depths_2d(P) -> np.ndarray:
    """Depth of every point of ``P`` within ``P``; cubic in ``len(P)``."""
    pts = _check_planar(P)
    k = len(pts)
    out = np.empty(k, dtype=int)
    for q in range(k):
        y = pts[q]
        zero = np.all(pts == y, axis=1)
        orient = orientation_signs(y, pts[:, None, :], pts[None, :, :])
        out[q] = _depth_from_signs(orient, zero, _direction_codes(pts - y))
    return out


def halfspace_depth_2d_oracle(P, y) -> int:
    """Brute-force depth in rational arithmetic, independent of the sweep.

    Collects the normals of every line through ``y`` and a point of ``P``,
    sorts them by angle, and evaluates the closed halfplane count for a
    direction strictly inside each open arc between consecutive normals.
    When every point is collinear with ``y`` the arcs are half-circles and
    the probe directions reduce to the two rays of the line.
    """
    pts = _check_planar(P)
    yx, yy = Fraction(float(y[0])), Fraction(float(y[1]))
    vecs = [(Fraction(float(px)) - yx, Fraction(float(py)) - yy) for px, py in pts]
    nonzero = [v for v in vecs if v != (0, 0)]
    if not nonzero:
        return len(vecs)

    def closed_count(u):
        return sum(1 for vx, vy in vecs if vx * u[0] + vy * u[1] >= 0)

    normals = []
    for vx, vy in nonzero:
        normals.append((-vy, vx))
        normals.append((vy, -vx))

    def half(u):
        return 0 if (u[1] > 0 or (u[1] == 0 and u[0] > 0)) else 1

    def cross(u, v):
        return u[0] * v[1] - u[1] * v[0]

    # bucket by half-plane, then insertion-sort by exact cross product
    ordered = []
    for h in (0, 1):
        bucket = [u for u in normals if half(u) == h]
        arr = []
        for u in bucket:
            i = 0
            while i < len(arr) and cross(arr[i], u) > 0:
                i += 1
            if i < len(arr) and cross(arr[i], u) == 0:
                continue  # same direction already present
            arr.insert(i, u)
        ordered.extend(arr)

    best = len(vecs)
    n = len(ordered)
    for i in range(n):
        a, b = ordered[i], ordered[(i + 1) % n]
        if cross(a, b) > 0:
            # any positive combination lies strictly inside the arc
            probe = (a[0] + b[0], a[1] + b[1])
        else:
            probe = (-a[1], a[0])
        best = min(best, closed_count(probe))
    return best


def deepest_point(P, cell: Sequence[int] | None = None) -> int:
    """Cloud index of the deepest point of ``cell`` (lowest index on ties)."""
    pts = _as_points(P)
    if cell is None:
        cell = range(len(pts))
    cell = np.sort(np.asarray(list(cell), dtype=int))
    if cell.size == 0:
        raise ValueError("empty cell")
    sub = pts[cell]
    if sub.shape[1] == 2:
        depths = cell_depths_2d(sub)
    else:
        depths = np.array([directional_depth_approx(sub, p) for p in sub])
    return int(cell[int(np.argmax(depths))])


# ---------------------------------------------------------------------------
# approximate depth in higher dimension


def sample_directions(dim: int, n_dirs: int, rng_seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(rng_seed)
    g = rng.standard_normal((n_dirs, dim))
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0] = 1.0
    return g / norms[:, None]


def directional_depth_approx(P, y, n_dirs: int = 64, rng_seed: int = 0) -> int:
    """Minimum closed halfspace count over ``2 * n_dirs`` sampled directions.

    Sampling a subset of halfspaces can only overestimate the minimum, so
    the result is an upper bound on the exact halfspace depth.
    """
    if n_dirs < 1:
        raise ValueError("n_dirs must be positive")
    pts = _as_points(P)
    if pts.shape[0] == 0:
        raise ValueError("empty point set")
    y = np.asarray(y, dtype=float)
    U = sample_directions(pts.shape[1], n_dirs, rng_seed)
    proj = (pts - y) @ U.T
    coincident = np.all(pts == y, axis=1)
    pos = ((proj >= 0) | coincident[:, None]).sum(axis=0)
    neg = ((proj <= 0) | coincident[:, None]).sum(axis=0)
    return int(min(pos.min(), neg.min()))


def halfspace_depth_exact(P, y) -> int:
    """Exact depth in any dimension via the arrangement of hyperplanes ``d^perp``.

    Exponential-free but slow (rational arithmetic, quadratic vertex count in
    3D); meant as a test oracle for small sets.
    """
    pts = _as_points(P)
    if pts.shape[0] == 0:
        raise ValueError("empty point set")
    yq = [Fraction(float(c)) for c in y]
    vecs = [tuple(Fraction(float(c)) - yc for c, yc in zip(p, yq)) for p in pts]
    zero = sum(1 for v in vecs if not any(v))
    nonzero = [v for v in vecs if any(v)]
    return zero + _open_min(nonzero)


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _cross3(u, v):
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def _open_min(vecs: list) -> int:
    """min over generic u of #{v : <v, u> > 0} for nonzero rational vectors."""
    if not vecs:
        return 0
    k = len(vecs[0])
    if k == 1:
        pos = sum(1 for (a,) in vecs if a > 0)
        return min(pos, len(vecs) - pos)
    if k == 2:
        vertices = []
        for v in vecs:
            vertices.append((-v[1], v[0]))
            vertices.append((v[1], -v[0]))
        bases = [[(v[0], v[1])] for v in vecs for _ in (0, 1)]
    else:
        vertices, bases = [], []
        for i in range(len(vecs)):
            for j in range(i + 1, len(vecs)):
                c = _cross3(vecs[i], vecs[j])
                if any(c):
                    for s in (1, -1):
                        u = tuple(s * x for x in c)
                        vertices.append(u)
                        bases.append([vecs[i], _cross3(u, vecs[i])])
        if not vertices:
            # all vectors collinear: reduce to one dimension
            ref = vecs[0]
            return _open_min([(_dot(v, ref),) for v in vecs])
    best = len(vecs)
    for u, basis in zip(vertices, bases):
        pos = 0
        on = []
        for v in vecs:
            s = _dot(v, u)
            if s > 0:
                pos += 1
            elif s == 0:
                on.append(tuple(_dot(v, b) for b in basis))
        if pos >= best:
            continue
        best = min(best, pos + _open_min(on))
    return best


# ---------------------------------------------------------------------------
# cover radii


def nearest_distances(X, L) -> np.ndarray:
    pts = _as_points(X)
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] == 0:
        raise ValueError("empty landmark set")
    return cdist(pts, L).min(axis=1)


def cover_radius(X, L) -> float:
    """max over x in X of the distance to the nearest landmark."""
    return float(nearest_distances(X, L).max())


def mean_signal_cover(X: PointCloud, L) -> float:
    """Mean distance from signal-labeled points to their nearest landmark."""
    mask = X.signal_mask
    if not mask.any():
        raise ValueError("no signal points")
    return float(nearest_distances(X.points[mask], L).mean())
