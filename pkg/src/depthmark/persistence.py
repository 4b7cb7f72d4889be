"""Persistence over GF(2) and diagram-level summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .witness import Filtration


@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    """Bars as parallel arrays; ``death`` is ``inf`` for essential classes."""

    dims: np.ndarray
    births: np.ndarray
    deaths: np.ndarray

    @classmethod
    def from_bars(cls, bars) -> "PersistenceDiagram":
        bars = list(bars)
        if not bars:
            return cls(np.zeros(0, int), np.zeros(0), np.zeros(0))
        d, b, e = zip(*bars)
        return cls(np.array(d, int), np.array(b, float), np.array(e, float))

    def __len__(self):
        return len(self.dims)

    def bars(self, dim: int | None = None) -> list[tuple]:
        rows = zip(self.dims.tolist(), self.births.tolist(), self.deaths.tolist())
        return sorted(r for r in rows if dim is None or r[0] == dim)

    def finite(self, dim: int) -> np.ndarray:
        """(k, 2) array of finite (birth, death) pairs in dimension ``dim``."""
        mask = (self.dims == dim) & np.isfinite(self.deaths)
        return np.column_stack([self.births[mask], self.deaths[mask]])

    def lifetimes(self, dim: int) -> np.ndarray:
        f = self.finite(dim)
        return f[:, 1] - f[:, 0]

    def betti_at(self, t: float) -> dict[int, int]:
        alive = (self.births <= t) & (t < self.deaths)
        out: dict[int, int] = {}
        for d in self.dims[alive].tolist():
            out[d] = out.get(d, 0) + 1
        return out


def boundary_positions(f: Filtration) -> list[list[int]]:
    """Facet positions of every simplex; raises if a facet is missing or late."""
    index = {}
    cols = []
    for j, s in enumerate(f.simplices):
        if s in index:
            raise ValueError("not a filtration: duplicate simplex")
        facets = []
        if len(s) > 1:
            for k in range(len(s)):
                face = s[:k] + s[k + 1:]
                i = index.get(face)
                if i is None:
                    raise ValueError("not a filtration: face missing before coface")
                if f.values[i] > f.values[j]:
                    raise ValueError("not a filtration: face value exceeds coface")
                facets.append(i)
        index[s] = j
        cols.append(facets)
    return cols


def reduce_pairs(f: Filtration) -> tuple[list[tuple[int, int]], list[int]]:
    """Persistence pairs (birth index, death index) and essential indices.

    Columns are Python integers used as GF(2) bit vectors; the pivot is the
    highest set bit. Dimensions are reduced top-down so pivots of dimension
    p+1 clear the matching dimension-p columns before they are touched.
    """
    facets = boundary_positions(f)
    dims = [len(s) - 1 for s in f.simplices]
    top = max(dims) if dims else 0
    by_dim: list[list[int]] = [[] for _ in range(top + 1)]
    for j, d in enumerate(dims):
        by_dim[d].append(j)

    pivot_of: dict[int, int] = {}   # low row -> reduced column bits
    paired_birth: set[int] = set()
    pairs = []
    for d in range(top, 0, -1):
        for j in by_dim[d]:
            if j in paired_birth:
                continue  # cleared: this column reduces to zero
            col = 0
            for i in facets[j]:
                col ^= 1 << i
            while col:
                low = col.bit_length() - 1
                other = pivot_of.get(low)
                if other is None:
                    pivot_of[low] = col
                    pairs.append((low, j))
                    paired_birth.add(low)
                    break
                col ^= other
    deaths = {j for _, j in pairs}
    essential = [j for j in range(len(dims)) if j not in paired_birth and j not in deaths]
    return sorted(pairs), essential


def compute_persistence(f: Filtration) -> PersistenceDiagram:
    """GF(2) persistence diagram; zero-length bars are dropped."""
    pairs, essential = reduce_pairs(f)
    vals = f.values
    bars = []
    for i, j in pairs:
        if vals[j] > vals[i]:
            bars.append((len(f.simplices[i]) - 1, float(vals[i]), float(vals[j])))
    for i in essential:
        bars.append((len(f.simplices[i]) - 1, float(vals[i]), math.inf))
    bars.sort()
    return PersistenceDiagram.from_bars(bars)


def truncate_diagram(d: PersistenceDiagram, r: float) -> PersistenceDiagram:
    """Diagram of the sub-filtration at scale ``r`` from the full diagram."""
    keep = d.births <= r
    deaths = np.where(d.deaths > r, np.inf, d.deaths)
    return PersistenceDiagram(d.dims[keep], d.births[keep], deaths[keep])


# ---------------------------------------------------------------------------
# summaries


def thresholded_count(d: PersistenceDiagram, dim: int, tau_life: float = 0.25) -> int:
    """Finite bars in ``dim`` with lifetime at least ``tau_life``."""
    if tau_life <= 0:
        raise ValueError("threshold must be positive")
    return int((d.lifetimes(dim) >= tau_life).sum())


def thresholded_h1_count(d: PersistenceDiagram, tau_life: float = 0.25) -> int:
    return thresholded_count(d, 1, tau_life)


def top_lifetimes(d: PersistenceDiagram, dim: int = 1, k: int = 2) -> list[float]:
    lt = np.sort(d.lifetimes(dim))[::-1][:k].tolist()
    return lt + [0.0] * (k - len(lt))


def life_ratio(top1: float, top2: float) -> float:
    return math.inf if top2 == 0 else top1 / top2


def serialize_diagram(d: PersistenceDiagram) -> str:
    lines = []
    for dim, b, e in d.bars():
        death = "inf" if math.isinf(e) else repr(e)
        lines.append(f"{dim} {b!r} {death}\n")
    return "".join(lines)


def parse_diagram(text: str) -> PersistenceDiagram:
    bars = []
    for line in text.splitlines():
        if line.strip():
            dim, b, e = line.split()
            bars.append((int(dim), float(b), float(e)))
    return PersistenceDiagram.from_bars(bars)


# ---------------------------------------------------------------------------
# bottleneck distance


def _linf(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.maximum(
        np.abs(A[:, None, 0] - B[None, :, 0]), np.abs(A[:, None, 1] - B[None, :, 1])
    )


def _perfect_matching_exists(C: np.ndarray, hA: np.ndarray, hB: np.ndarray, delta: float) -> bool:
    nA, nB = len(hA), len(hB)
    n = nA + nB
    adj = np.zeros((n, n), dtype=bool)
    # rows: points of A then diagonal copies of B; cols: points of B then diagonal copies of A
    adj[:nA, :nB] = C <= delta
    adj[np.arange(nA), nB + np.arange(nA)] = hA <= delta
    adj[nA + np.arange(nB), np.arange(nB)] = hB <= delta
    adj[nA:, nB:] = True
    match = maximum_bipartite_matching(csr_matrix(adj), perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck_distance(A, B) -> float:
    """Exact sup-norm bottleneck distance between finite diagrams.

    The optimum is one of the candidate values (pairwise sup-distances and
    half lifetimes), so a binary search over the sorted candidates with a
    perfect-matching test is exact.
    """
    A = np.asarray(A, dtype=float).reshape(-1, 2)
    B = np.asarray(B, dtype=float).reshape(-1, 2)
    hA = (A[:, 1] - A[:, 0]) / 2.0
    hB = (B[:, 1] - B[:, 0]) / 2.0
    if len(A) == 0 and len(B) == 0:
        return 0.0
    C = _linf(A, B) if len(A) and len(B) else np.zeros((len(A), len(B)))
    cand = np.unique(np.concatenate([[0.0], C.ravel(), hA, hB]))
    lo, hi = 0, len(cand) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _perfect_matching_exists(C, hA, hB, cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo])


def trim_bars(d: PersistenceDiagram, dim: int, trim: float) -> np.ndarray:
    f = d.finite(dim)
    return f[(f[:, 1] - f[:, 0]) >= trim]


def bottleneck_trimmed(d1: PersistenceDiagram, d2: PersistenceDiagram, dim: int = 1,
                       trim: float = 0.05) -> float:
    """Bottleneck distance after dropping infinite bars and bars shorter than ``trim``."""
    if trim < 0:
        raise ValueError("trim must be nonnegative")
    return bottleneck_distance(trim_bars(d1, dim, trim), trim_bars(d2, dim, trim))
