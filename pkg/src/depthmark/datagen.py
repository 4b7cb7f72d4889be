"""Synthetic signal families, contamination models, and silhouette ingestion."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .geometry import OUTLIER, PointCloud

FAMILIES = ("circle", "two_circles", "figure_eight", "torus", "silhouette")
CONTAMINATIONS = ("clean", "uniform", "cluster")

TARGET_H1 = {"circle": 1, "two_circles": 2, "figure_eight": 2, "torus": 2}
TARGET_H2 = {"torus": 1}


@dataclass(frozen=True)
class DatasetSpec:
    family: str = "circle"
    n_signal: int | None = None
    noise_sigma: float = 0.05
    contamination: str = "clean"
    outlier_fraction: float = 0.10
    rng_seed: int = 0
    n_clusters: int = 3
    cluster_sigma: float = 0.05
    box_inflation: float = 0.25
    torus_major: float = 1.0
    torus_minor: float = 0.35
    normalize: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.contamination not in CONTAMINATIONS:
            raise ValueError(f"unknown contamination {self.contamination!r}")
        if self.n_signal is not None and self.n_signal <= 0:
            raise ValueError("n_signal must be positive")
        if self.noise_sigma < 0 or self.outlier_fraction < 0:
            raise ValueError("noise and outlier fraction must be nonnegative")

    @property
    def size(self) -> int:
        if self.n_signal is not None:
            return self.n_signal
        return 800 if self.family == "torus" else 400

    @property
    def target_h1(self) -> int:
        return TARGET_H1.get(self.family, 1)


def _circle(rng, n, center, radius, sigma) -> np.ndarray:
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    r = radius + sigma * rng.standard_normal(n) if sigma > 0 else np.full(n, radius)
    return np.column_stack([center[0] + r * np.cos(theta), center[1] + r * np.sin(theta)])


def sample_torus(rng, n, major=1.0, minor=0.35, sigma=0.0) -> np.ndarray:
    """Area-uniform torus samples (rejection on the tube angle) plus isotropic noise."""
    out = []
    while sum(len(o) for o in out) < n:
        k = 2 * n
        u = rng.uniform(0, 2 * np.pi, k)
        v = rng.uniform(0, 2 * np.pi, k)
        w = rng.uniform(0, 1, k)
        keep = w <= (major + minor * np.cos(v)) / (major + minor)
        u, v = u[keep], v[keep]
        ring = major + minor * np.cos(v)
        out.append(np.column_stack([ring * np.cos(u), ring * np.sin(u), minor * np.sin(v)]))
    pts = np.concatenate(out)[:n]
    if sigma > 0:
        pts = pts + sigma * rng.standard_normal(pts.shape)
    return pts


def signal_points(spec: DatasetSpec, rng) -> np.ndarray:
    n, s = spec.size, spec.noise_sigma
    if spec.family == "circle":
        return _circle(rng, n, (0.0, 0.0), 1.0, s)
    if spec.family in ("two_circles", "figure_eight"):
        c = 1.5 if spec.family == "two_circles" else 1.0
        n1 = n // 2
        return np.concatenate([
            _circle(rng, n1, (-c, 0.0), 1.0, s),
            _circle(rng, n - n1, (c, 0.0), 1.0, s),
        ])
    if spec.family == "torus":
        return sample_torus(rng, n, spec.torus_major, spec.torus_minor, s)
    raise ValueError("silhouette clouds come from load_silhouette_pgm")


def _inflated_box(signal: np.ndarray, inflation: float):
    lo, hi = signal.min(axis=0), signal.max(axis=0)
    mid, half = (lo + hi) / 2, (hi - lo) / 2 * (1.0 + inflation)
    return mid - half, mid + half


def outlier_count(n_signal: int, fraction: float) -> int:
    return int(round(fraction * n_signal))


def add_uniform_outliers(X: PointCloud, count: int, rng, inflation: float = 0.25) -> PointCloud:
    """Append ``count`` points uniform in the inflated signal bounding box."""
    if count <= 0:
        return X
    lo, hi = _inflated_box(X.points[X.signal_mask], inflation)
    extra = rng.uniform(lo, hi, size=(count, X.dim))
    return PointCloud(np.concatenate([X.points, extra]), X.labels + (OUTLIER,) * count)


def add_cluster_outliers(X: PointCloud, count: int, rng, n_clusters: int = 3,
                         sigma: float = 0.05, inflation: float = 0.25) -> PointCloud:
    """Append ``count`` points split over Gaussian clusters centered in the inflated box."""
    if count <= 0:
        return X
    lo, hi = _inflated_box(X.points[X.signal_mask], inflation)
    centers = rng.uniform(lo, hi, size=(n_clusters, X.dim))
    sizes = [count // n_clusters + (1 if i < count % n_clusters else 0) for i in range(n_clusters)]
    extra = np.concatenate([
        c + sigma * rng.standard_normal((k, X.dim)) for c, k in zip(centers, sizes)
    ])
    return PointCloud(np.concatenate([X.points, extra]), X.labels + (OUTLIER,) * count)


def contaminate(X: PointCloud, spec: DatasetSpec, rng) -> PointCloud:
    n_sig = int(X.signal_mask.sum())
    k = outlier_count(n_sig, spec.outlier_fraction)
    if spec.contamination == "uniform":
        return add_uniform_outliers(X, k, rng, spec.box_inflation)
    if spec.contamination == "cluster":
        return add_cluster_outliers(X, k, rng, spec.n_clusters, spec.cluster_sigma,
                                    spec.box_inflation)
    return X


def normalize(X: PointCloud) -> PointCloud:
    """Center on the signal centroid and scale the signal bounding box to side 2."""
    sig = X.points[X.signal_mask] if X.signal_mask.any() else X.points
    center = sig.mean(axis=0)
    side = float((sig.max(axis=0) - sig.min(axis=0)).max())
    scale = 2.0 / side if side > 0 else 1.0
    return PointCloud((X.points - center) * scale, X.labels)


def generate(spec: DatasetSpec) -> PointCloud:
    """Deterministic labeled cloud for ``spec`` (signal first, then outliers)."""
    rng = np.random.default_rng(spec.rng_seed)
    X = PointCloud.from_points(signal_points(spec, rng))
    if spec.normalize and spec.family != "torus":
        X = normalize(X)
    return contaminate(X, spec, rng)


# ---------------------------------------------------------------------------
# PGM silhouettes


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a P2 (ASCII) or P5 (binary) PGM image; returns (pixels, maxval)."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ValueError(f"unreadable file: {path}") from exc
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"not a PGM file: {path}")
    # header tokens: magic, width, height, maxval; '#' starts a comment
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ValueError(f"truncated PGM header: {path}")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    width, height, maxval = tokens
    pos += 1  # single whitespace before the raster
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        need = width * height * dtype.itemsize
        raster = np.frombuffer(data[pos:pos + need], dtype=dtype)
    else:
        body = b"\n".join(line.split(b"#")[0] for line in data[pos:].splitlines())
        raster = np.array(body.split(), dtype=int)
    if raster.size < width * height:
        raise ValueError(f"truncated PGM raster: {path}")
    img = raster[: width * height].reshape(height, width).astype(int)
    return img, maxval


def write_pgm(path, img: np.ndarray, maxval: int = 255, binary: bool = True) -> None:
    img = np.asarray(img, dtype=int)
    h, w = img.shape
    if binary:
        Path(path).write_bytes(f"P5\n{w} {h}\n{maxval}\n".encode() + img.astype(np.uint8).tobytes())
    else:
        rows = "\n".join(" ".join(map(str, r)) for r in img)
        Path(path).write_text(f"P2\n{w} {h}\n{maxval}\n{rows}\n")


def boundary_mask(fg: np.ndarray) -> np.ndarray:
    """Foreground pixels with at least one 4-neighbor in the background.

    Pixels outside the image count as background.
    """
    padded = np.pad(fg, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return fg & ~interior


def silhouette_boundary(path) -> np.ndarray:
    """(row, col) boundary pixels of a thresholded PGM silhouette."""
    img, maxval = read_pgm(path)
    fg = img > maxval / 2.0
    if not fg.any():
        raise ValueError("empty foreground")
    return np.argwhere(boundary_mask(fg))


def silhouette_loops(path) -> int:
    """Number of 8-connected boundary curves, used as the target H1 count."""
    img, maxval = read_pgm(path)
    fg = img > maxval / 2.0
    if not fg.any():
        raise ValueError("empty foreground")
    _, n = ndimage.label(boundary_mask(fg), structure=np.ones((3, 3), dtype=int))
    return int(n)


def load_silhouette_pgm(path, n_boundary: int, rng_seed: int = 0) -> PointCloud:
    """Seeded uniform subsample of boundary pixels, normalized, all labeled signal."""
    if n_boundary <= 0:
        raise ValueError("n_boundary must be positive")
    rc = silhouette_boundary(path)
    if len(rc) < n_boundary:
        raise ValueError(
            f"only {len(rc)} boundary pixels, fewer than n_boundary={n_boundary}"
        )
    rng = np.random.default_rng(rng_seed)
    pick = np.sort(rng.choice(len(rc), size=n_boundary, replace=False))
    rc = rc[pick]
    pts = np.column_stack([rc[:, 1], -rc[:, 0]]).astype(float)
    return normalize(PointCloud.from_points(pts))


def read_manifest(path) -> list[tuple[str, str, int | None]]:
    """Lines ``path class [target_h1]``; relative paths resolve against the manifest."""
    base = Path(path).parent
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValueError(f"missing manifest: {path}") from exc
    entries = []
    for line in text.splitlines():
        line = line.split("#")[0].strip()
        if not line:
            continue
        parts = line.split()
        p = Path(parts[0])
        if not p.is_absolute():
            p = base / p
        cls = parts[1] if len(parts) > 1 else p.stem
        target = int(parts[2]) if len(parts) > 2 else None
        entries.append((str(p), cls, target))
    if not entries:
        raise ValueError("empty manifest")
    return entries


# ---------------------------------------------------------------------------
# CSV


def cloud_to_csv(X: PointCloud) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "z"][: X.dim] + ["label"])
    for p, lab in zip(X.points.tolist(), X.labels):
        w.writerow([repr(c) for c in p] + [lab])
    return buf.getvalue()


def cloud_from_csv(text: str) -> PointCloud:
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    if header[-1] != "label" or header[:-1] not in (["x", "y"], ["x", "y", "z"]):
        raise ValueError("expected header x,y[,z],label")
    pts = [[float(c) for c in r[:-1]] for r in rows[1:] if r]
    labels = [r[-1] for r in rows[1:] if r]
    return PointCloud.from_points(pts, labels)

