"""Matched-trial orchestration.

Every method in a (setting, trial) sees the same generated cloud; the cloud
is derived from a per-trial seed hashed from the master seed and the setting
key, so nothing needs to be stored to reproduce a trial.
"""
from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .. import landmarks as lm
from ..datagen import (DatasetSpec, TARGET_H1, add_cluster_outliers, add_uniform_outliers,
                       generate, load_silhouette_pgm, outlier_count, read_manifest,
                       silhouette_loops)
from ..geometry import PointCloud, mean_signal_cover
from ..persistence import (bottleneck_trimmed, compute_persistence, life_ratio,
                           thresholded_count, top_lifetimes, truncate_diagram)
from ..witness import WitnessConfig, build_lazy_witness

log = logging.getLogger(__name__)

PRESETS = ("synthetic", "mpeg7", "torus", "sweep")
SWEEP_ALPHAS = (0.3, 0.5, 0.6, 0.8)
SWEEP_TAUS = (0.5, 1.0, 1.5)


@dataclass(frozen=True)
class MethodSpec:
    name: str
    alpha_max: float | None = None
    tau: float | None = None
    label: str | None = None

    @property
    def tag(self) -> str:
        return self.label or self.name


def sw(alpha_max: float, tau: float, label: str | None = None) -> MethodSpec:
    return MethodSpec("support_weighted", alpha_max, tau, label)


@dataclass(frozen=True)
class BenchConfig:
    preset: str = "synthetic"
    master_seed: int = 0
    trials: int = 20
    budgets: tuple = (20, 30, 40)
    families: tuple = ("circle", "two_circles", "figure_eight")
    noises: tuple = ("uniform", "cluster")
    methods: tuple = (
        MethodSpec("maxmin"), sw(0.6, 1.0), MethodSpec("epsnet_matched"), MethodSpec("dense_core"),
    )
    nu: int = 1
    rmax: float = 2.1
    max_dim: int = 2
    life_thresh: float = 0.25
    trim: float = 0.05
    n_signal: int | None = None
    noise_sigma: float = 0.05
    outlier_fraction: float = 0.10
    cluster_sigma: float = 0.05
    dense_k: int = 10
    keep_fraction: float = 0.8
    reference: bool = True
    manifest: str | None = None
    n_boundary: int = 400
    workers: int = 1
    # torus preset
    radius_band: tuple = (0.52, 0.56, 0.60)
    h1_life: float = 0.14
    h2_life: float = 0.12
    torus_noises: dict = field(default_factory=lambda: {
        "clean": ("clean", 0.0),
        "mild_cluster": ("cluster", 0.05),
        "moderate_cluster": ("cluster", 0.10),
    })

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not self.budgets or min(self.budgets) < 1:
            raise ValueError("invalid budgets")
        if not self.methods:
            raise ValueError("no methods")
        if self.preset == "torus" and not self.radius_band:
            raise ValueError("empty radius band")


def preset_config(preset: str, **overrides) -> BenchConfig:
    """Default configuration for a named experiment preset."""
    if preset == "synthetic":
        base = BenchConfig(preset="synthetic")
    elif preset == "mpeg7":
        base = BenchConfig(
            preset="mpeg7", trials=5, families=("silhouette",),
            noises=("clean", "cluster", "uniform"),
            methods=(MethodSpec("maxmin"), sw(0.6, 0.5), MethodSpec("epsnet_matched"),
                     MethodSpec("dense_core")),
        )
    elif preset == "sweep":
        grid = tuple(
            sw(a, t, f"support_weighted[{a},{t}]") for a in SWEEP_ALPHAS for t in SWEEP_TAUS
        )
        base = BenchConfig(
            preset="sweep", families=("circle", "two_circles"), noises=("cluster", "uniform"),
            methods=(MethodSpec("maxmin"),) + grid,
        )
    elif preset == "torus":
        base = BenchConfig(
            preset="torus", trials=20, budgets=(60,), families=("torus",),
            noises=("clean", "mild_cluster", "moderate_cluster"),
            methods=(MethodSpec("maxmin"), sw(0.55, 1.0)), max_dim=3,
            noise_sigma=0.02, reference=False,
        )
    else:
        raise ValueError(f"unknown preset {preset!r}")
    return replace(base, **overrides)


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("DEPTHMARK_THREADS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def trial_seed(master: int, *key) -> int:
    text = "|".join(str(k) for k in (master,) + key)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def cloud_hash(X: PointCloud) -> str:
    h = hashlib.sha256(np.ascontiguousarray(X.points).tobytes())
    h.update("".join(lab[0] for lab in X.labels).encode())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# records


@dataclass
class TrialRecord:
    family: str
    noise: str
    budget: int
    seed_index: int
    method: str
    alpha_max: float
    tau: float
    nu: int
    rmax: float
    life_thresh: float
    trim: float
    cloud_hash: str
    target_h1: int
    h1_count: int
    h1_count_correct: int
    top1_life: float
    top2_life: float
    life_ratio: float
    trimmed_bottleneck: float
    outlier_landmarks: int
    mean_signal_cover: float
    simplex_count: int
    wall_time_seconds: float = 0.0


@dataclass
class TorusRecord:
    noise: str
    budget: int
    seed_index: int
    method: str
    alpha_max: float
    tau: float
    h1_life: float
    h2_life: float
    cloud_hash: str
    h1_hit: int
    h2_hit: int
    torus_hit: int
    hit_radius: float
    outlier_landmarks: int
    mean_signal_cover: float
    simplex_count: int
    wall_time_seconds: float = 0.0


TIMING_FIELDS = ("wall_time_seconds",)


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def records_to_csv(records, include_timing: bool = False) -> str:
    """Deterministic CSV; timings are excluded unless asked for."""
    if not records:
        raise ValueError("empty record set")
    cols = [f.name for f in fields(records[0])
            if include_timing or f.name not in TIMING_FIELDS]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([_fmt(getattr(r, c)) for c in cols])
    return buf.getvalue()


def records_from_csv(text: str, cls=TrialRecord) -> list:
    types = {f.name: f.type for f in fields(cls)}
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        kw = {}
        for k, v in row.items():
            t = types.get(k)
            if t is None:
                continue
            kw[k] = int(v) if t == "int" else float(v) if t == "float" else v
        out.append(cls(**kw))
    return out


# ---------------------------------------------------------------------------
# one trial


@dataclass
class Setting:
    family: str
    noise: str
    budget: int
    source: str | None = None   # silhouette path
    target_h1: int | None = None

    @property
    def key(self) -> tuple:
        return (self.family, self.noise, self.budget)


def make_cloud(cfg: BenchConfig, setting: Setting, seed: int) -> PointCloud:
    if setting.source is not None:
        rng = np.random.default_rng(seed)
        X = load_silhouette_pgm(setting.source, cfg.n_boundary, rng_seed=seed)
        k = outlier_count(len(X), cfg.outlier_fraction)
        if setting.noise == "uniform":
            X = add_uniform_outliers(X, k, rng)
        elif setting.noise == "cluster":
            X = add_cluster_outliers(X, k, rng, sigma=cfg.cluster_sigma)
        return X
    if cfg.preset == "torus":
        contamination, frac = cfg.torus_noises[setting.noise]
    else:
        contamination, frac = setting.noise, cfg.outlier_fraction
    spec = DatasetSpec(
        family=setting.family, n_signal=cfg.n_signal, noise_sigma=cfg.noise_sigma,
        contamination=contamination, outlier_fraction=frac, rng_seed=seed,
        cluster_sigma=cfg.cluster_sigma,
    )
    return generate(spec)


class _RecenterCache:
    """Maxmin seeds, cells and deepest points shared by all recentering variants."""

    def __init__(self, X: PointCloud, m: int, seed: int):
        self.X, self.m, self.seed = X, m, seed
        self._ready = False

    def get(self):
        if not self._ready:
            self.seeds = lm.maxmin(self.X, self.m)
            self.part = lm.assign_cells(self.X, self.seeds)
            self.deepest = lm.deepest_in_cells(self.X, self.part, self.seed)
            self._ready = True
        return self.part, self.deepest


def select_landmarks(cfg: BenchConfig, X: PointCloud, method: MethodSpec, m: int, seed: int,
                     cache: _RecenterCache | None = None) -> lm.LandmarkSet:
    if method.name in ("full_recenter", "support_weighted", "fixed_step"):
        cache = cache or _RecenterCache(X, m, seed)
        part, deepest = cache.get()
        if method.name == "full_recenter":
            return lm.recenter_full(X, part, deepest=deepest)
        if method.name == "fixed_step":
            return lm.recenter_fixed_step(X, part, method.alpha_max, deepest=deepest)
        return lm.recenter_support_weighted(X, part, method.alpha_max, method.tau,
                                            deepest=deepest)
    return lm.select(X, method.name, m, rng_seed=seed, dense_k=cfg.dense_k,
                     keep_fraction=cfg.keep_fraction)


def _nan(v):
    return float("nan") if v is None else float(v)


def run_trial(cfg: BenchConfig, setting: Setting, trial: int) -> list[TrialRecord]:
    seed = trial_seed(cfg.master_seed, setting.family if setting.source is None else setting.source,
                      setting.noise, setting.budget, trial)
    X = make_cloud(cfg, setting, seed)
    chash = cloud_hash(X)
    m = setting.budget
    wcfg = WitnessConfig(cfg.nu, cfg.rmax, cfg.max_dim)
    target = setting.target_h1 if setting.target_h1 is not None else TARGET_H1[setting.family]

    ref = None
    if cfg.reference:
        clean = X.subset(np.flatnonzero(X.signal_mask))
        ref_lm = lm.maxmin(clean, min(m, len(clean)))
        ref = compute_persistence(build_lazy_witness(ref_lm.coords, clean.points, wcfg))

    cache = _RecenterCache(X, m, seed)
    out = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        L = select_landmarks(cfg, X, method, m, seed, cache)
        f = build_lazy_witness(L.coords, X.points, wcfg)
        diag = compute_persistence(f)
        count = thresholded_count(diag, 1, cfg.life_thresh)
        top1, top2 = top_lifetimes(diag, 1, 2)
        out.append(TrialRecord(
            family=setting.family if setting.source is None else _silhouette_name(setting),
            noise=setting.noise, budget=m, seed_index=trial, method=method.tag,
            alpha_max=_nan(method.alpha_max), tau=_nan(method.tau), nu=cfg.nu, rmax=cfg.rmax,
            life_thresh=cfg.life_thresh, trim=cfg.trim, cloud_hash=chash, target_h1=target,
            h1_count=count, h1_count_correct=int(count == target),
            top1_life=top1, top2_life=top2, life_ratio=life_ratio(top1, top2),
            trimmed_bottleneck=(bottleneck_trimmed(diag, ref, 1, cfg.trim) if ref is not None
                                else float("nan")),
            outlier_landmarks=lm.outlier_landmark_count(X, L),
            mean_signal_cover=mean_signal_cover(X, L.coords),
            simplex_count=len(f),
            wall_time_seconds=time.perf_counter() - t0,
        ))
    return out


def _silhouette_name(setting: Setting) -> str:
    return os.path.splitext(os.path.basename(setting.source))[0]


# ---------------------------------------------------------------------------
# torus


def evaluate_torus_trial(diagrams: dict, radius_band, life_thresholds: tuple[float, float],
                         target=(2, 1)) -> dict:
    """Per-method hit flags over a radius band.

    ``diagrams`` maps method -> diagram computed at scale ``max(radius_band)``
    (or any larger scale); each radius is evaluated on the truncated diagram.
    A torus hit needs both targets at one common radius.
    """
    band = sorted(radius_band)
    if not band:
        raise ValueError("empty radius band")
    h1_t, h2_t = life_thresholds
    out = {}
    for name, diag in diagrams.items():
        h1 = h2 = both = False
        hit_r = float("nan")
        for r in band:
            d = truncate_diagram(diag, r)
            a = thresholded_count(d, 1, h1_t) == target[0]
            b = thresholded_count(d, 2, h2_t) == target[1]
            h1 |= a
            h2 |= b
            if a and b and not both:
                both, hit_r = True, r
        out[name] = {"h1_hit": h1, "h2_hit": h2, "torus_hit": both, "hit_radius": hit_r}
    return out


def torus_diagrams(cfg: BenchConfig, X: PointCloud, m: int, seed: int):
    """Landmarks, filtration sizes and diagrams at the top of the radius band."""
    wcfg = WitnessConfig(cfg.nu, max(cfg.radius_band), 3)
    cache = _RecenterCache(X, m, seed)
    res = {}
    for method in cfg.methods:
        t0 = time.perf_counter()
        L = select_landmarks(cfg, X, method, m, seed, cache)
        f = build_lazy_witness(L.coords, X.points, wcfg)
        res[method.tag] = (L, len(f), compute_persistence(f), time.perf_counter() - t0)
    return res


def run_torus_trial(cfg: BenchConfig, setting: Setting, trial: int) -> list[TorusRecord]:
    seed = trial_seed(cfg.master_seed, "torus", setting.noise, setting.budget, trial)
    X = make_cloud(cfg, setting, seed)
    chash = cloud_hash(X)
    res = torus_diagrams(cfg, X, setting.budget, seed)
    flags = evaluate_torus_trial({k: v[2] for k, v in res.items()}, cfg.radius_band,
                                 (cfg.h1_life, cfg.h2_life))
    out = []
    for method in cfg.methods:
        L, size, _, dt = res[method.tag]
        fl = flags[method.tag]
        out.append(TorusRecord(
            noise=setting.noise, budget=setting.budget, seed_index=trial, method=method.tag,
            alpha_max=_nan(method.alpha_max), tau=_nan(method.tau),
            h1_life=cfg.h1_life, h2_life=cfg.h2_life, cloud_hash=chash,
            h1_hit=int(fl["h1_hit"]), h2_hit=int(fl["h2_hit"]), torus_hit=int(fl["torus_hit"]),
            hit_radius=fl["hit_radius"], outlier_landmarks=lm.outlier_landmark_count(X, L),
            mean_signal_cover=mean_signal_cover(X, L.coords), simplex_count=size,
            wall_time_seconds=dt,
        ))
    return out


def pilot_thresholds(cfg: BenchConfig, trials: int = 10, h1_grid=None, h2_grid=None,
                     noise: str = "clean") -> dict:
    """Grid-search lifetime thresholds maximizing maxmin's torus-hit rate."""
    h1_grid = h1_grid or tuple(np.round(np.arange(0.02, 0.41, 0.02), 2))
    h2_grid = h2_grid or tuple(np.round(np.arange(0.01, 0.21, 0.01), 2))
    pcfg = replace(cfg, methods=(MethodSpec("maxmin"),))
    m = cfg.budgets[0]
    diags = []
    for t in range(trials):
        seed = trial_seed(cfg.master_seed, "pilot", noise, m, t)
        X = make_cloud(pcfg, Setting("torus", noise, m), seed)
        diags.append(torus_diagrams(pcfg, X, m, seed)["maxmin"][2])
    grid = [(float(a), float(b)) for a in h1_grid for b in h2_grid]
    rates = np.array([
        np.mean([evaluate_torus_trial({"maxmin": d}, cfg.radius_band, ab)["maxmin"]["torus_hit"]
                 for d in diags])
        for ab in grid
    ])
    # among the optimal cells, take the one nearest the plateau's centroid
    tied = np.array([ab for ab, r in zip(grid, rates) if r == rates.max()])
    a, b = tied[np.argmin(((tied - tied.mean(axis=0)) ** 2).sum(axis=1))]
    return {"h1_life": float(a), "h2_life": float(b), "hit_rate": float(rates.max()),
            "trials": trials, "radius_band": list(cfg.radius_band), "budget": m}


# ---------------------------------------------------------------------------
# whole benchmark


def settings_for(cfg: BenchConfig) -> list[Setting]:
    if cfg.preset == "mpeg7":
        if not cfg.manifest:
            raise ValueError("missing manifest")
        out = []
        for path, _cls, target in read_manifest(cfg.manifest):
            t = target if target is not None else silhouette_loops(path)
            for noise in cfg.noises:
                for m in cfg.budgets:
                    out.append(Setting("silhouette", noise, m, source=path, target_h1=t))
        return out
    if cfg.preset == "torus":
        return [Setting("torus", noise, m) for noise in cfg.noises for m in cfg.budgets]
    return [Setting(f, noise, m) for f in cfg.families for noise in cfg.noises
            for m in cfg.budgets]


def _job(args):
    cfg, setting, trial = args
    if cfg.preset == "torus":
        return run_torus_trial(cfg, setting, trial)
    return run_trial(cfg, setting, trial)


def run_benchmark(cfg: BenchConfig, progress: bool = False) -> list:
    """All records of a preset, ordered by (setting, seed, method)."""
    jobs = [(cfg, s, t) for s in settings_for(cfg) for t in range(cfg.trials)]
    workers = worker_count(cfg.workers)
    results = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, recs in enumerate(pool.map(_job, jobs, chunksize=1)):
                results.extend(recs)
                if progress and (i + 1) % 10 == 0:
                    log.info("%d/%d trials", i + 1, len(jobs))
    else:
        for i, job in enumerate(jobs):
            results.extend(_job(job))
            if progress and (i + 1) % 10 == 0:
                log.info("%d/%d trials", i + 1, len(jobs))
    return results
