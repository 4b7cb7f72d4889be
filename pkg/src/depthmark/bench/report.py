"""Aggregate tables, paired statistics and plot-ready CSV from trial records."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from .runner import TorusRecord
from .stats import paired_stats

METHOD_COLUMNS = ("Method", "Accuracy", "Mean cover", "Outlier lmks", "Top-1 life",
                  "Trimmed bottleneck")
LONG_METRICS = ("h1_count_correct", "top1_life", "top2_life", "life_ratio",
                "trimmed_bottleneck", "outlier_landmarks", "mean_signal_cover",
                "simplex_count")
PAIRED_METRICS = {"mean_signal_cover": True, "h1_count_correct": False}  # lower is better?


def _mean(values) -> float:
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=float)
    return float(v.mean()) if v.size else float("nan")


def _num(v: float, digits: int = 4) -> str:
    return "nan" if math.isnan(v) else f"{v:.{digits}f}"


def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _methods(records) -> list[str]:
    seen = {}
    for r in records:
        seen.setdefault(r.method, None)
    return list(seen)


def _summary_row(group) -> list[str]:
    return [
        _num(_mean(r.h1_count_correct for r in group)),
        _num(_mean(r.mean_signal_cover for r in group)),
        _num(_mean(r.outlier_landmarks for r in group), 2),
        _num(_mean(r.top1_life for r in group)),
        _num(_mean(r.trimmed_bottleneck for r in group)),
    ]


def method_table(records) -> str:
    """One row per method: accuracy, cover, outlier landmarks, top-1 life, bottleneck."""
    by = defaultdict(list)
    for r in records:
        by[r.method].append(r)
    return _write_csv(METHOD_COLUMNS, [[m] + _summary_row(by[m]) for m in _methods(records)])


def breakdown_table(records, keys: tuple[str, ...]) -> str:
    """Per-method summaries grouped by the record attributes in ``keys``."""
    by = defaultdict(list)
    for r in records:
        by[tuple(getattr(r, k) for k in keys) + (r.method,)].append(r)
    order = {m: i for i, m in enumerate(_methods(records))}
    rows = [list(map(str, k)) + _summary_row(by[k])
            for k in sorted(by, key=lambda k: (k[:-1], order[k[-1]]))]
    header = [k.replace("_", " ").capitalize() for k in keys] + list(METHOD_COLUMNS)
    return _write_csv(header, rows)


def pair_records(records, method: str, baseline: str):
    """Matched (setting key, treat, base) triples keyed on setting and seed."""
    idx = {}
    for r in records:
        idx[(r.family, r.noise, r.budget, r.seed_index, r.method)] = r
    out = []
    for (fam, noise, m, seed, meth), r in idx.items():
        if meth != method:
            continue
        b = idx.get((fam, noise, m, seed, baseline))
        if b is None:
            continue
        if b.cloud_hash != r.cloud_hash:
            raise ValueError(f"unmatched clouds for {(fam, noise, m, seed)}")
        out.append(((fam, noise, m), r, b))
    return out


def paired_report(records, baseline: str = "maxmin", n_resamples: int = 10_000) -> list[dict]:
    out = []
    for method in _methods(records):
        if method == baseline:
            continue
        pairs = pair_records(records, method, baseline)
        if not pairs:
            continue
        keys = [p[0] for p in pairs]
        for metric, lower in PAIRED_METRICS.items():
            st = paired_stats(
                metric, method, baseline,
                [getattr(p[1], metric) for p in pairs], [getattr(p[2], metric) for p in pairs],
                settings=keys, lower_is_better=lower, n_resamples=n_resamples,
            )
            out.append(st.to_dict())
    return out


def long_format(records) -> str:
    """One row per (record, metric): plot-ready."""
    rows = []
    for r in records:
        for metric in LONG_METRICS:
            v = float(getattr(r, metric))
            rows.append([r.family, r.noise, r.budget, r.seed_index, r.method, metric,
                         "inf" if math.isinf(v) else repr(v)])
    return _write_csv(("family", "noise", "budget", "seed_index", "method", "metric", "value"),
                      rows)


def torus_table(records) -> str:
    """Hit rates, cover and outlier landmarks per noise regime and method."""
    by = defaultdict(list)
    for r in records:
        by[(r.noise, r.method)].append(r)
    rows = []
    for (noise, method), g in by.items():
        rows.append([noise, method, len(g),
                     _num(_mean(r.h1_hit for r in g)), _num(_mean(r.h2_hit for r in g)),
                     _num(_mean(r.torus_hit for r in g)),
                     _num(_mean(r.mean_signal_cover for r in g)),
                     _num(_mean(r.outlier_landmarks for r in g), 2)])
    return _write_csv(("Noise", "Method", "Trials", "H1 hit", "H2 hit", "Torus hit",
                       "Mean cover", "Outlier lmks"), rows)


def aggregate_and_report(records, out_dir, baseline: str = "maxmin",
                         n_resamples: int = 10_000) -> dict[str, Path]:
    """Write all report files into ``out_dir``; returns name -> path."""
    records = list(records)
    if not records:
        raise ValueError("empty record set")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    if isinstance(records[0], TorusRecord):
        files["torus"] = out / "torus_summary.csv"
        files["torus"].write_text(torus_table(records))
        return files
    contents = {
        "methods": ("methods.csv", method_table(records)),
        "dataset_noise": ("by_dataset_noise.csv", breakdown_table(records, ("family", "noise"))),
        "budget": ("by_budget.csv", breakdown_table(records, ("budget",))),
        "paired": ("paired_stats.json",
                   json.dumps(paired_report(records, baseline, n_resamples), indent=2) + "\n"),
        "long": ("long.csv", long_format(records)),
    }
    for key, (name, text) in contents.items():
        files[key] = out / name
        files[key].write_text(text, encoding="utf-8")
    return files
