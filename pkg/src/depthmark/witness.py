"""Lazy witness filtration built directly from landmark/witness distances."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

import numpy as np
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class WitnessConfig:
    nu: int = 1
    r_max: float = 2.1
    max_dim: int = 2

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be nonnegative")
        if self.r_max <= 0:
            raise ValueError("r_max must be positive")
        if self.max_dim not in (1, 2, 3):
            raise ValueError("max_dim must be 1, 2 or 3")


@dataclass(frozen=True, eq=False)
class Filtration:
    """Simplices sorted by (value, dimension, vertices); faces come first."""

    simplices: tuple   # tuple of vertex tuples
    values: np.ndarray

    def __len__(self):
        return len(self.simplices)

    def dims(self) -> np.ndarray:
        return np.array([len(s) - 1 for s in self.simplices], dtype=int)

    def truncate(self, r: float) -> "Filtration":
        """Sub-filtration of simplices with value <= r (a prefix)."""
        k = int(np.searchsorted(self.values, r, side="right"))
        return Filtration(self.simplices[:k], self.values[:k])

    @classmethod
    def from_simplices(cls, items: Iterable) -> "Filtration":
        """Build from (vertices, value) pairs, sorting into filtration order."""
        rows = sorted(
            ((float(v), len(s) - 1, tuple(sorted(s))) for s, v in items),
        )
        return cls(tuple(r[2] for r in rows), np.array([r[0] for r in rows], dtype=float))


def witness_offsets(D: np.ndarray, nu: int) -> np.ndarray:
    """nu-th smallest landmark distance per witness column (zeros if nu = 0)."""
    D = np.asarray(D, dtype=float)
    if nu == 0:
        return np.zeros(D.shape[1])
    if nu > D.shape[0]:
        raise ValueError("nu exceeds the number of landmarks")
    return np.partition(D, nu - 1, axis=0)[nu - 1]


def edge_values(D: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """E[a, b] = min_i (max(D[a, i], D[b, i]) - m_i)_+, with a zero diagonal."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[1] == 0:
        raise ValueError("empty witness set")
    offsets = np.asarray(offsets, dtype=float)
    m = D.shape[0]
    E = np.zeros((m, m))
    for a in range(m):
        cand = np.maximum(D[a][None, :], D[a + 1:]) - offsets[None, :]
        row = np.maximum(cand.min(axis=1), 0.0) if cand.size else np.empty(0)
        E[a, a + 1:] = row
        E[a + 1:, a] = row
    return E


def _cliques(adj: list[set], max_dim: int):
    """Yield cliques of size 3 .. max_dim+1 as sorted tuples."""
    m = len(adj)

    def extend(clique, cand):
        if len(clique) >= 3:
            yield clique
        if len(clique) == max_dim + 1:
            return
        for v in sorted(cand):
            yield from extend(clique + (v,), {w for w in cand & adj[v] if w > v})

    for a in range(m):
        higher = {b for b in adj[a] if b > a}
        for b in sorted(higher):
            yield from extend((a, b), {c for c in higher & adj[b] if c > b})


def clique_filtration(E: np.ndarray, r_max: float, max_dim: int) -> Filtration:
    """Clique complex of the edges with E <= r_max, valued by max edge value."""
    E = np.asarray(E, dtype=float)
    m = E.shape[0]
    items = [((a,), 0.0) for a in range(m)]
    adj: list[set] = [set() for _ in range(m)]
    if max_dim >= 1:
        iu, ju = np.triu_indices(m, k=1)
        keep = E[iu, ju] <= r_max
        for a, b in zip(iu[keep], ju[keep]):
            a, b = int(a), int(b)
            adj[a].add(b)
            adj[b].add(a)
            items.append(((a, b), E[a, b]))
    if max_dim >= 2:
        for c in _cliques(adj, max_dim):
            val = max(E[u, v] for u, v in combinations(c, 2))
            items.append((c, val))
    return Filtration.from_simplices(items)


def build_lazy_witness(L, W, cfg: WitnessConfig = WitnessConfig()) -> Filtration:
    """Lazy witness filtration on landmarks ``L`` witnessed by ``W``."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if L.shape[0] == 0 or W.shape[0] == 0:
        raise ValueError("landmarks and witnesses must be nonempty")
    if L.shape[1] != W.shape[1]:
        raise ValueError("dimension mismatch")
    D = cdist(L, W)
    E = edge_values(D, witness_offsets(D, cfg.nu))
    return clique_filtration(E, cfg.r_max, cfg.max_dim)


def simplex_count(f: Filtration) -> int:
    return len(f)


def format_filtration(f: Filtration) -> str:
    """One simplex per line as ``v1 v2 ... : value`` in filtration order."""
    return "".join(
        " ".join(map(str, s)) + " : " + repr(float(v)) + "\n"
        for s, v in zip(f.simplices, f.values)
    )


def parse_filtration(text: str) -> Filtration:
    simplices, values = [], []
    for line in text.splitlines():
        if not line.strip():
            continue
        verts, val = line.split(":")
        simplices.append(tuple(int(v) for v in verts.split()))
        values.append(float(val))
    return Filtration(tuple(simplices), np.array(values, dtype=float))
