//! Plotting script written next to every result set.

/// Reads whichever CSV files sit beside it and draws one figure per file.
/// Needs Python 3 with matplotlib; comment lines start with `#`.
pub const PLOT_SCRIPT: &str = r##"#!/usr/bin/env python3
"""Plot the CSV files in this directory. Usage: python3 plot_results.py [dir]"""
import csv
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read(path):
    with open(path) as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    return rows


def col(rows, name, kind=float):
    return [kind(r[name]) for r in rows]


def tv(rows, name, title):
    plt.figure()
    t = col(rows, "t", int)
    plt.semilogy(t, col(rows, "tv_exact"), label="exact")
    plt.semilogy(t, col(rows, "tv_empirical"), ".", label="empirical")
    plt.xlabel("t")
    plt.ylabel("total variation to posterior")
    plt.title(title)
    plt.legend()
    plt.savefig(name)


def rates(rows, name):
    snrs = sorted(set(col(rows, "snr_db")))
    naive = [[float(r["naive_r"]) for r in rows if float(r["snr_db"]) == s] for s in snrs]
    pre = [[float(r["preconditioned_r"]) for r in rows if float(r["snr_db"]) == s] for s in snrs]
    plt.figure()
    pos = range(len(snrs))
    plt.boxplot(naive, positions=[p - 0.2 for p in pos], widths=0.35)
    plt.boxplot(pre, positions=[p + 0.2 for p in pos], widths=0.35)
    plt.xticks(list(pos), [f"{s:g}" for s in snrs])
    plt.xlabel("SNR (dB); left naive, right preconditioned")
    plt.ylabel("convergence rate r")
    plt.savefig(name)


def ser(rows, name):
    by = defaultdict(list)
    for r in rows:
        by[r["detector"]].append((float(r["snr_db"]), float(r["ser"])))
    plt.figure()
    for det, pts in by.items():
        pts.sort()
        plt.semilogy([p[0] for p in pts], [max(p[1], 1e-7) for p in pts], "o-", label=det)
    plt.xlabel("SNR (dB)")
    plt.ylabel("symbol error rate")
    plt.legend()
    plt.savefig(name)


def llr(rows, name):
    plt.figure()
    s = col(rows, "samples", int)
    plt.loglog(s, col(rows, "is_realization_median"), "o-", label="importance sampling")
    plt.loglog(s, col(rows, "list_realization_median"), "s-", label="list")
    plt.xlabel("S")
    plt.ylabel("median over realizations of mean |LLR error|")
    plt.legend()
    plt.savefig(name)


def hist(rows, name):
    keep = [r for r in rows if r["below_cutoff"] != "true"]
    x = range(len(keep))
    plt.figure(figsize=(max(6, len(keep) * 0.4), 4))
    plt.bar([i - 0.25 for i in x], col(keep, "pi"), 0.25, label="posterior")
    plt.bar(list(x), col(keep, "dmala"), 0.25, label="DMALA")
    plt.bar([i + 0.25 for i in x], col(keep, "unadjusted"), 0.25, label="always-accept")
    plt.xticks(list(x), [r["symbols"] for r in keep], rotation=90)
    plt.ylabel("probability")
    plt.legend()
    plt.tight_layout()
    plt.savefig(name)


def main():
    d = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
    p = lambda f: os.path.join(d, f)
    if os.path.exists(p("tv_curve.csv")):
        tv(read(p("tv_curve.csv")), p("tv_curve.png"), "DMALA")
    if os.path.exists(p("tv_unadjusted.csv")):
        tv(read(p("tv_unadjusted.csv")), p("tv_unadjusted.png"), "always-accept kernel")
    if os.path.exists(p("rates.csv")):
        rates(read(p("rates.csv")), p("rates.png"))
    if os.path.exists(p("ser.csv")):
        ser(read(p("ser.csv")), p("ser.png"))
    if os.path.exists(p("llr_errors.csv")):
        llr(read(p("llr_errors.csv")), p("llr_errors.png"))
    if os.path.exists(p("histogram.csv")):
        hist(read(p("histogram.csv")), p("histogram.png"))


if __name__ == "__main__":
    main()
"##;
