#!/usr/bin/env python3
"""Plot the metric curves written by `iiotsim train`.

Usage: plot_metrics.py RESULTS_DIR [RESULTS_DIR ...] [-o OUT.png]

Each directory is scanned for <scheme>_<metric>.csv files; one subplot per
metric, one line per scheme, shaded 95% CI. Without matplotlib the final
aggregated values are printed instead.
"""

import argparse
import csv
import glob
import os
from collections import defaultdict

METRICS = ["completed", "success_rate", "collision_rate", "goodput"]


def read_series(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return (
        [int(r["episode"]) for r in rows],
        [float(r["mean"]) for r in rows],
        [float(r["ci_lo"]) for r in rows],
        [float(r["ci_hi"]) for r in rows],
    )


def collect(dirs):
    curves = defaultdict(dict)  # metric -> scheme -> series
    for d in dirs:
        for path in sorted(glob.glob(os.path.join(d, "*_*.csv"))):
            name = os.path.basename(path)[: -len(".csv")]
            for metric in METRICS:
                suffix = "_" + metric
                if name.endswith(suffix):
                    curves[metric][name[: -len(suffix)]] = read_series(path)
    return curves


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("dirs", nargs="+")
    ap.add_argument("-o", "--out", default="metrics.png")
    args = ap.parse_args()
    curves = collect(args.dirs)
    if not curves:
        raise SystemExit("no metric CSVs found")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        for metric in METRICS:
            for scheme, (ep, mean, lo, hi) in sorted(curves.get(metric, {}).items()):
                print(f"{metric:15s} {scheme:18s} final {mean[-1]:.3f} [{lo[-1]:.3f}, {hi[-1]:.3f}]")
        return

    fig, axes = plt.subplots(2, 2, figsize=(11, 7))
    for ax, metric in zip(axes.flat, METRICS):
        for scheme, (ep, mean, lo, hi) in sorted(curves.get(metric, {}).items()):
            if len(ep) == 1:  # baselines: flat reference line
                ax.axhline(mean[0], linestyle="--", alpha=0.7, label=scheme)
            else:
                ax.plot(ep, mean, label=scheme)
                ax.fill_between(ep, lo, hi, alpha=0.2)
        ax.set_title(metric.replace("_", " "))
        ax.set_xlabel("training episodes")
        ax.grid(alpha=0.3)
    axes.flat[0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
