"""Paired statistics for matched trials."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import norm, rankdata


def wilcoxon_signed_rank(diffs) -> float:
    """Two-sided signed-rank p-value (normal approximation).

    Zero differences are dropped, tied magnitudes share average ranks, the
    variance carries the tie correction, and a 0.5 continuity correction is
    applied. All-zero input gives 1.0.
    """
    d = np.asarray(diffs, dtype=float)
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return 1.0
    ranks = rankdata(np.abs(d))
    w_plus = ranks[d > 0].sum()
    mean = n * (n + 1) / 4.0
    _, counts = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - (counts**3 - counts).sum() / 48.0
    if var <= 0:
        return 1.0
    z = (abs(w_plus - mean) - 0.5) / math.sqrt(var)
    z = max(z, 0.0)
    return float(min(1.0, 2.0 * norm.sf(z)))


def bootstrap_mean_ci(diffs, n_resamples: int = 10_000, rng_seed: int = 0,
                      level: float = 0.95) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    d = np.asarray(diffs, dtype=float)
    if d.size == 0:
        raise ValueError("no differences")
    if np.all(d == d[0]):
        return float(d[0]), float(d[0])
    rng = np.random.default_rng(rng_seed)
    means = np.empty(n_resamples)
    chunk = max(1, 2_000_000 // d.size)
    for start in range(0, n_resamples, chunk):
        stop = min(n_resamples, start + chunk)
        idx = rng.integers(0, d.size, size=(stop - start, d.size))
        means[start:stop] = d[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def exact_discordance_test(wins: int, losses: int) -> float:
    """Two-sided exact binomial test of ``wins`` out of ``wins + losses`` at p = 1/2.

    Sums the probabilities of all outcomes no more likely than the observed
    one; computed in integers, so there is no rounding in the comparison.
    """
    if wins < 0 or losses < 0:
        raise ValueError("counts must be nonnegative")
    n = wins + losses
    if n == 0:
        return 1.0
    observed = math.comb(n, wins)
    total = sum(c for c in (math.comb(n, k) for k in range(n + 1)) if c <= observed)
    return float(min(Fraction(1), Fraction(total, 2**n)))


@dataclass
class PairedStats:
    metric: str
    method: str
    baseline: str
    mean_diff: float
    ci_lo: float
    ci_hi: float
    wilcoxon_p: float
    wins: int
    losses: int
    discordance_p: float
    n_pairs: int
    settings_won: int
    settings_total: int

    def to_dict(self) -> dict:
        return asdict(self)


def paired_stats(metric: str, method: str, baseline: str, treat, base, settings=None,
                 lower_is_better: bool = True, n_resamples: int = 10_000,
                 rng_seed: int = 0) -> PairedStats:
    """Compare matched arrays ``treat`` vs ``base`` (same trial order).

    ``settings`` labels each pair with its setting key; a setting is won when
    the treatment's mean is strictly better there.
    """
    treat = np.asarray(treat, dtype=float)
    base = np.asarray(base, dtype=float)
    if treat.shape != base.shape or treat.size == 0:
        raise ValueError("need matched, nonempty samples")
    diffs = treat - base
    lo, hi = bootstrap_mean_ci(diffs, n_resamples, rng_seed)
    better = diffs < 0 if lower_is_better else diffs > 0
    worse = diffs > 0 if lower_is_better else diffs < 0
    wins, losses = int(better.sum()), int(worse.sum())
    won = total = 0
    if settings is not None:
        keys = list(settings)
        for key in sorted(set(keys)):
            mask = np.array([k == key for k in keys])
            delta = diffs[mask].mean()
            total += 1
            won += int(delta < 0 if lower_is_better else delta > 0)
    return PairedStats(
        metric=metric, method=method, baseline=baseline,
        mean_diff=float(diffs.mean()), ci_lo=lo, ci_hi=hi,
        wilcoxon_p=wilcoxon_signed_rank(diffs),
        wins=wins, losses=losses, discordance_p=exact_discordance_test(wins, losses),
        n_pairs=int(diffs.size), settings_won=won, settings_total=total,
    )
