"""Command-line entry point: ``depthmark <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import landmarks as lm
from ..datagen import DatasetSpec, cloud_from_csv, cloud_to_csv, generate
from ..persistence import compute_persistence, serialize_diagram
from ..witness import WitnessConfig, build_lazy_witness
from .report import aggregate_and_report, paired_report
from .runner import (BenchConfig, TrialRecord, pilot_thresholds, preset_config,
                     records_from_csv, records_to_csv, run_benchmark, sw)

log = logging.getLogger("depthmark")


def _budgets(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad budget list {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("budgets must be positive integers")
    return vals


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--trials", type=int)
    p.add_argument("--budgets", type=_budgets)
    p.add_argument("--nu", type=int, default=1)
    p.add_argument("--rmax", type=float)
    p.add_argument("--alpha-max", type=float, help="support-weighted alpha_max")
    p.add_argument("--tau", type=float, help="support-weighted tau")
    p.add_argument("--life-thresh", type=float, default=0.25)
    p.add_argument("--trim", type=float, default=0.05)
    p.add_argument("--manifest")
    p.add_argument("--workers", type=int, help="worker processes (capped by DEPTHMARK_THREADS)")
    p.add_argument("--out", default="results", help="output directory")


def _config(preset: str, args) -> BenchConfig:
    over = {"master_seed": args.master_seed, "nu": args.nu, "life_thresh": args.life_thresh,
            "trim": args.trim, "workers": args.workers}
    for key in ("trials", "budgets", "rmax", "manifest"):
        if getattr(args, key) is not None:
            over[key] = getattr(args, key)
    for key in ("h1_life", "h2_life"):
        if getattr(args, key, None) is not None:
            over[key] = getattr(args, key)
    cfg = preset_config(preset, **over)
    if args.alpha_max is not None or args.tau is not None:
        methods = []
        for m in cfg.methods:
            if m.name == "support_weighted" and m.label is None:
                m = sw(args.alpha_max if args.alpha_max is not None else m.alpha_max,
                       args.tau if args.tau is not None else m.tau)
            methods.append(m)
        cfg = replace(cfg, methods=tuple(methods))
    return cfg


def _write_run(records, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "records.csv").write_text(records_to_csv(records), encoding="utf-8")
    (out_dir / "records_timed.csv").write_text(records_to_csv(records, include_timing=True),
                                               encoding="utf-8")
    files = aggregate_and_report(records, out_dir)
    log.info("wrote %d records and %s to %s", len(records), ", ".join(sorted(files)), out_dir)


def cmd_gen(args) -> int:
    spec = DatasetSpec(family=args.family, n_signal=args.n_signal, noise_sigma=args.sigma,
                       contamination=args.contamination, outlier_fraction=args.outlier_fraction,
                       rng_seed=args.seed)
    _emit(cloud_to_csv(generate(spec)), args.out)
    return 0


def cmd_select(args) -> int:
    X = cloud_from_csv(Path(args.cloud).read_text())
    L = lm.select(X, args.method, args.m, rng_seed=args.seed, alpha=args.alpha,
                  alpha_max=args.alpha_max, tau=args.tau)
    header = ["index"] + ["x", "y", "z"][: X.dim]
    lines = [",".join(header)]
    for i, c in zip(L.indices.tolist(), L.coords.tolist()):
        lines.append(",".join([str(i)] + [repr(v) for v in c]))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_persist(args) -> int:
    X = cloud_from_csv(Path(args.cloud).read_text())
    rows = np.loadtxt(args.landmarks, delimiter=",", skiprows=1, ndmin=2)
    L = rows[:, 1:]
    f = build_lazy_witness(L, X.points, WitnessConfig(args.nu, args.rmax, args.max_dim))
    _emit(serialize_diagram(compute_persistence(f)), args.out)
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args.preset, args)
    records = run_benchmark(cfg, progress=True)
    _write_run(records, Path(args.out))
    return 0


def cmd_sweep(args) -> int:
    cfg = _config("sweep", args)
    records = run_benchmark(cfg, progress=True)
    _write_run(records, Path(args.out))
    return 0


def cmd_pilot(args) -> int:
    over = {"master_seed": args.master_seed, "nu": args.nu}
    if args.budgets is not None:
        over["budgets"] = args.budgets
    cfg = preset_config("torus", **over)
    res = pilot_thresholds(cfg, trials=args.trials or 10)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "pilot.json").write_text(json.dumps(res, indent=2) + "\n")
    sys.stdout.write(json.dumps(res) + "\n")
    return 0


def cmd_stats(args) -> int:
    records = []
    for path in args.records:
        records.extend(records_from_csv(Path(path).read_text(), TrialRecord))
    if not records:
        raise ValueError("empty record set")
    text = json.dumps(paired_report(records, args.baseline), indent=2) + "\n"
    _emit(text, args.json)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="depthmark", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="emit a labeled cloud as CSV")
    g.add_argument("--family", default="circle")
    g.add_argument("--contamination", default="clean")
    g.add_argument("--n-signal", type=int)
    g.add_argument("--sigma", type=float, default=0.05)
    g.add_argument("--outlier-fraction", type=float, default=0.10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("select", help="choose landmarks from a cloud CSV")
    s.add_argument("cloud")
    s.add_argument("--method", default="maxmin")
    s.add_argument("-m", type=int, default=30)
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--alpha-max", type=float, default=0.6)
    s.add_argument("--tau", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_select)

    p = sub.add_parser("persist", help="diagram of the lazy witness filtration")
    p.add_argument("cloud")
    p.add_argument("landmarks")
    p.add_argument("--nu", type=int, default=1)
    p.add_argument("--rmax", type=float, default=2.1)
    p.add_argument("--max-dim", type=int, default=2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_persist)

    b = sub.add_parser("bench", help="run a benchmark preset")
    b.add_argument("preset", choices=("synthetic", "mpeg7", "torus"))
    _common(b)
    b.add_argument("--h1-life", type=float, help="torus H1 lifetime threshold")
    b.add_argument("--h2-life", type=float, help="torus H2 lifetime threshold")
    b.set_defaults(func=cmd_bench)

    w = sub.add_parser("sweep", help="support-weighted parameter grid")
    _common(w)
    w.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("pilot", help="calibrate torus lifetime thresholds")
    _common(pl)
    pl.set_defaults(func=cmd_pilot)

    st = sub.add_parser("stats", help="paired statistics from record CSVs")
    st.add_argument("records", nargs="+")
    st.add_argument("--baseline", default="maxmin")
    st.add_argument("--json", help="output JSON path (stdout if omitted)")
    st.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"depthmark: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
